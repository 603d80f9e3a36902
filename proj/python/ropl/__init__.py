"""Runtime-uncertainty-robust off-policy value bounds and learning."""

from ._ropl import (  # noqa: F401
    ConfigError,
    LoggedDataset,
    NumericalError,
    asym_loss,
    build_reward_bounds,
    convert_supervised,
    dr_bound,
    dr_value,
    feasible_interval,
    feasible_interval_truncated,
    fit_constant,
    fluctuation,
    generalization_slack,
    ips_bound,
    ips_value,
    learn_dr,
    nips_bound_exact,
    nips_bound_greedy,
    nips_value,
    oracle_value,
    policy_probs_from_json,
    rademacher_mc,
    reward_surrogate_tables,
    rm_bound,
    rm_value,
    sample_perturbed_policy,
    split_dataset,
    tips_bound,
    tips_value,
    validate_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
