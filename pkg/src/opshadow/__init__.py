"""Importance-sampled operator shadows, a classical-shadow baseline, and budget sweeps."""
from .decompose import CoefficientVector, decompose, decompose_local, read_observable, write_observable
from .estimators import (
    EstimateReport,
    EstimatorConfig,
    estimate_linear_combination,
    estimate_multi,
    fidelity_l1,
    fidelity_l2,
    l1_operator_shadow,
    l2_operator_shadow,
)
from .pauli import PauliString, WeightedPauliSum
from .sampler import SamplingTree
from .shadow import ShadowTable, collect_snapshots, shadow_estimate
from .states import ExpectationOracle, MixedState, PureState

__version__ = "0.1.0"

__all__ = [
    "CoefficientVector",
    "EstimateReport",
    "EstimatorConfig",
    "ExpectationOracle",
    "MixedState",
    "PauliString",
    "PureState",
    "SamplingTree",
    "ShadowTable",
    "WeightedPauliSum",
    "collect_snapshots",
    "decompose",
    "decompose_local",
    "estimate_linear_combination",
    "estimate_multi",
    "fidelity_l1",
    "fidelity_l2",
    "l1_operator_shadow",
    "l2_operator_shadow",
    "read_observable",
    "shadow_estimate",
    "write_observable",
]
