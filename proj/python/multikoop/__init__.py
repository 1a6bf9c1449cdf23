"""Multi-agent Koopman modeling, analysis, and control toolkit."""

from ._core import (
    Config,
    Error,
    Model,
    Reduced,
    __version__,
    analyze,
    control,
    fit,
    initial_growth,
    kreiss_bound,
    report,
    simulate,
    simulate_trajectory,
    solve_discrete_lyapunov,
)

__all__ = [
    "Config",
    "Error",
    "Model",
    "Reduced",
    "__version__",
    "analyze",
    "control",
    "fit",
    "initial_growth",
    "kreiss_bound",
    "report",
    "simulate",
    "simulate_trajectory",
    "solve_discrete_lyapunov",
]
