"""Random-weight particle filtering for partially observed diffusion signals.

The heavy lifting lives in the compiled extension ``rwpf._core``; this package
re-exports its public surface.
"""

from ._core import (
    Dataset,
    Observation,
    Regime,
    bench_estimators,
    exact_propagate,
    kalman_filter_ou,
    latent_at,
    phi,
    read_dataset,
    run_filter,
    simulate_cox_dataset,
    simulate_ou_dataset,
    simulate_sine_dataset,
    transition_density,
    write_dataset,
)

__all__ = [
    "Dataset",
    "Observation",
    "Regime",
    "bench_estimators",
    "exact_propagate",
    "kalman_filter_ou",
    "latent_at",
    "phi",
    "read_dataset",
    "run_filter",
    "simulate_cox_dataset",
    "simulate_ou_dataset",
    "simulate_sine_dataset",
    "transition_density",
    "write_dataset",
]

__version__ = "0.1.0"
