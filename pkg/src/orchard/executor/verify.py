"""Per-step output verification against the node's need contract."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from typing import Any

from orchard.core.types import CheckResult, NeedContract, value_conforms


def verify_step(
    output: Mapping[str, Any],
    contract: NeedContract,
    citations: Sequence[str] = (),
) -> list[CheckResult]:
    """Evaluate schema conformance, every quality criterion, and every constraint.

    The full list is always returned; nothing short-circuits on the first
    failure. Criteria whose target field is absent come back not-evaluable,
    which still blocks step success.
    """
    results: list[CheckResult] = []
    produced = contract.output_schema.field_map()
    for name, field in produced.items():
        if name not in output or output[name] is None:
            status = "fail" if field.required else "pass"
        else:
            status = "pass" if value_conforms(output[name], field.type) else "fail"
        results.append(CheckResult(f"schema:{name}", status))
    for criterion in contract.quality:
        results.append(CheckResult(f"quality:{criterion.label()}", criterion.evaluate(output, citations)))
    for constraint in contract.constraints:
        results.append(CheckResult(f"constraint:{constraint.label()}", constraint.evaluate(output, citations)))
    return results


def all_passed(results: Sequence[CheckResult]) -> bool:
    return all(r.status == "pass" for r in results)
