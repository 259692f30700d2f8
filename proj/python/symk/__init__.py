"""Symplectic kernel predictors for Hamiltonian flow maps."""

from ._symk import (
    HamiltonianSystem,
    KernelFamily,
    KernelSpec,
    PredictorModel,
    SymkError,
    kernel_eval,
    kernel_grad2,
    kernel_mixed2,
    load_model,
    propagate,
    resonance_check,
    run_experiment,
    step_size_bound_box,
)

__all__ = [
    "HamiltonianSystem",
    "KernelFamily",
    "KernelSpec",
    "PredictorModel",
    "SymkError",
    "kernel_eval",
    "kernel_grad2",
    "kernel_mixed2",
    "load_model",
    "propagate",
    "resonance_check",
    "run_experiment",
    "step_size_bound_box",
]
