"""orchard: contract-driven DAG orchestration with capability-aware tooling.

Tasks are routed between a fast retrieval-augmented answer path and a
planned path that executes verifiable DAG plans under explicit need
contracts, matching capabilities to tools through a dual-index hub and
generating missing tools on demand.
"""

__version__ = "0.1.0"
