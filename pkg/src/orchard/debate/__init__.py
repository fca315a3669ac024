"""Multi-supervisor plan generation and critique-defend-revise refinement."""

from orchard.debate.edits import (
    Edit,
    InsertEdit,
    RemoveEdit,
    ReplaceEdit,
    WrapEdit,
    apply_edit,
    edit_from_dict,
    edit_to_dict,
)
from orchard.debate.session import (
    GenerationResult,
    Issue,
    ProviderSupervisor,
    Resolution,
    RoundLog,
    ScriptedPlanner,
    ScriptedSupervisor,
    constraint_coverage,
    debate_round,
    generate_candidates,
    refine,
    repair_plan,
)

__all__ = [
    "Edit",
    "GenerationResult",
    "InsertEdit",
    "Issue",
    "ProviderSupervisor",
    "RemoveEdit",
    "ReplaceEdit",
    "Resolution",
    "RoundLog",
    "ScriptedPlanner",
    "ScriptedSupervisor",
    "WrapEdit",
    "apply_edit",
    "constraint_coverage",
    "debate_round",
    "edit_from_dict",
    "edit_to_dict",
    "generate_candidates",
    "refine",
    "repair_plan",
]
