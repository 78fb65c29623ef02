"""Sparse Fock-state simulator for a heralded polarization CNOT gate."""

from .circuit import Circuit, CircuitConfig, build_canonical_circuit
from .elements import DistinguishabilityModel, Element, apply, apply_all
from .errors import ConfigError, CutoffError, InvariantError, PolfockError, RegistryError
from .experiments import (
    ExperimentReport,
    run_entangler,
    run_feed_forward,
    run_hom_scan,
    run_noise_study,
    run_truth_table,
)
from .fock import FockState, Mode, ModeRegistry, registry_create
from .kernels import BACKEND
from .measurement import HeraldRule, derive_feed_forward, fidelity, herald
from .sources import InputSpec

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Circuit",
    "CircuitConfig",
    "ConfigError",
    "CutoffError",
    "DistinguishabilityModel",
    "Element",
    "ExperimentReport",
    "FockState",
    "HeraldRule",
    "InputSpec",
    "InvariantError",
    "Mode",
    "ModeRegistry",
    "PolfockError",
    "RegistryError",
    "apply",
    "apply_all",
    "build_canonical_circuit",
    "derive_feed_forward",
    "fidelity",
    "herald",
    "registry_create",
    "run_entangler",
    "run_feed_forward",
    "run_hom_scan",
    "run_noise_study",
    "run_truth_table",
]
