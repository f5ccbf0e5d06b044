from .model import (SWEEP_COLUMNS, ObfuscationParams, attack_feasible, binomial_tolerance, choose_k,
                    monte_carlo_success, p_success, sweep, sweep_csv)
from .planner import (OBFUSCATION_PRIORITY, REWRITE_POOL, LedgerCollision, ObfuscationPlan, Obfuscator,
                      PathTooShort, RewriteLedger, candidate_paths, install_plan, plan_path)

__all__ = [
    "LedgerCollision", "OBFUSCATION_PRIORITY", "ObfuscationParams", "ObfuscationPlan", "Obfuscator",
    "PathTooShort", "REWRITE_POOL", "RewriteLedger", "SWEEP_COLUMNS", "attack_feasible",
    "binomial_tolerance", "candidate_paths", "choose_k", "end_to_end_defeat_test", "install_plan",
    "monte_carlo_success", "p_success", "plan_path", "sweep", "sweep_csv",
]


def end_to_end_defeat_test(scenario, k: int, n: int = 1, seed=None):
    """Run a scenario's attack campaign with k-hop obfuscation; returns the attacker's report."""
    from ..harness.runner import run_with_obfuscation

    return run_with_obfuscation(scenario, k, n, seed)
