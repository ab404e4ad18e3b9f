"""Python bindings for the hsgd simulator."""

from ._core import (
    Config,
    HsgdError,
    Result,
    aggregate,
    aggregation_weights,
    derive_tau_s,
    gradient_check,
    lambda_exceeds_dataset,
    load_config,
    parse_config,
    round_timing,
    run,
    share_counts,
    sweep_lambda,
    timing_breakdown,
)

__all__ = [
    "Config",
    "HsgdError",
    "Result",
    "aggregate",
    "aggregation_weights",
    "derive_tau_s",
    "gradient_check",
    "lambda_exceeds_dataset",
    "load_config",
    "parse_config",
    "round_timing",
    "run",
    "share_counts",
    "sweep_lambda",
    "timing_breakdown",
]
