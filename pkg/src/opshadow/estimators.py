"""Importance-sampled Pauli estimators of ``Tr[O rho]``.

Every shot-based estimator follows the same loop: draw a Pauli index from a
:class:`~opshadow.sampler.SamplingTree`, measure that Pauli ``M`` times, turn
the fraction ``Z`` of +1 outcomes into ``2Z - 1`` and rescale by a per-leaf
factor:

* l1:  ``sign(h_i) * ||h||_1``           (variance <= ||h||_1^2 (4/M + 5))
* l2:  ``||h||_2^2 / h_k``               (variance <= ||h||_2^2 (4/M + 4 + L))

Draws are generated in fixed-size chunks, each from its own stream derived
from the run seed and the chunk number, and reduced in chunk order, so a run
is reproducible bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .decompose import CoefficientVector, combine_linear
from .rng import derive_seed, stream
from .sampler import L1, L2, SamplingTree
from .states import ExpectationOracle, State

CHUNK = 1 << 16
PURITY_TOL = 1e-8
GROUP_FAILURE = 0.25


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class EstimatorConfig:
    """``samples`` is T (None: derive it from epsilon and delta)."""

    samples: int | None = None
    shots_per_pauli: int = 4
    epsilon: float = 0.05
    delta: float = 0.01
    median_groups: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.samples is not None and self.samples < 1:
            raise EstimatorError(f"samples must be >= 1, got {self.samples}")
        if self.shots_per_pauli < 1:
            raise EstimatorError(f"shots_per_pauli must be >= 1, got {self.shots_per_pauli}")
        if not self.epsilon > 0:
            raise EstimatorError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise EstimatorError(f"delta must lie in (0, 1), got {self.delta}")
        if self.median_groups < 1 or (self.median_groups > 1 and self.median_groups % 2 == 0):
            raise EstimatorError(f"median_groups must be 1 or odd, got {self.median_groups}")

    def replace(self, **kw) -> "EstimatorConfig":
        return EstimatorConfig(**{**asdict(self), **kw})


@dataclass(frozen=True)
class EstimateReport:
    value: float
    samples_used: int
    shots_used: int
    empirical_variance: float
    method: str
    seed: int
    epsilon: float | None = None
    per_group_means: tuple[float, ...] = field(default_factory=tuple)
    bound_samples: int | None = None
    norm: float | None = None

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "value": self.value,
            "samples": self.samples_used,
            "shots": self.shots_used,
            "variance": self.empirical_variance,
            "seed": self.seed,
            "epsilon": self.epsilon,
        }
        if len(self.per_group_means) > 1:
            d["groups"] = list(self.per_group_means)
        d["bound_samples"] = self.bound_samples
        d["norm"] = self.norm
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# bounds


def l1_variance_bound(l1: float, shots_per_pauli: int) -> float:
    return l1**2 * (4.0 / shots_per_pauli + 5.0)


def l2_variance_bound(l2: float, leaves: int, shots_per_pauli: int) -> float:
    return l2**2 * (4.0 / shots_per_pauli + 4.0 + leaves)


def chebyshev_failure(variance_bound: float, samples: int, epsilon: float) -> float:
    return variance_bound / (samples * epsilon**2)


def samples_for(variance_bound: float, epsilon: float, delta: float, median_groups: int = 1) -> int:
    """Sample count T making the Chebyshev (or median-of-means) failure bound at most ``delta``."""
    if median_groups == 1:
        return max(1, math.ceil(variance_bound / (delta * epsilon**2)))
    per_group = max(1, math.ceil(variance_bound / (GROUP_FAILURE * epsilon**2)))
    return median_groups * per_group


def median_groups_for(delta: float) -> int:
    return 2 * math.ceil(math.log(1.0 / delta)) + 1


def median_of_means(values, k: int) -> float:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise EstimatorError("median_of_means of an empty sequence")
    if k < 1 or (k > 1 and k % 2 == 0):
        raise EstimatorError(f"group count must be 1 or odd, got {k}")
    if k == 1:
        return float(values.mean())
    size = values.size // k
    if size == 0:
        raise EstimatorError(f"{values.size} values cannot fill {k} groups")
    return float(np.median(values[: size * k].reshape(k, size).mean(axis=1)))


# core sampling loop


class _Accumulator:
    """Chunk-wise mean / M2 (Chan et al. merge) plus per-group sums."""

    def __init__(self, total: int, groups: int):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.groups = groups
        self.group_size = total // groups
        self.group_sums = np.zeros(groups)

    def add(self, start: int, x: np.ndarray) -> None:
        nb = x.size
        mb = float(x.mean())
        m2b = float(np.square(x - mb).sum())
        na = self.count
        delta = mb - self.mean
        self.count = na + nb
        self.mean += delta * nb / self.count
        self.m2 += m2b + delta**2 * na * nb / self.count
        if self.groups > 1:
            gid = (start + np.arange(nb)) // self.group_size
            keep = gid < self.groups
            self.group_sums += np.bincount(gid[keep], weights=x[keep], minlength=self.groups)

    def result(self) -> tuple[float, float, tuple[float, ...]]:
        var = self.m2 / (self.count - 1) if self.count > 1 else 0.0
        if self.groups == 1:
            return self.mean, var, (self.mean,)
        means = self.group_sums / self.group_size
        return float(np.median(means)), var, tuple(float(m) for m in means)


def _as_oracle(state) -> Callable:
    if isinstance(state, ExpectationOracle) or callable(state):
        return state
    return ExpectationOracle(state)


def _leaf_factor(tree: SamplingTree) -> np.ndarray:
    if tree.mode == L1:
        return tree.leaf_signs * tree.root_total
    if np.any(tree.leaf_values == 0):
        raise EstimatorError("zero coefficient in an l2 tree; pruning was bypassed")
    return tree.root_total / tree.leaf_values


def _chunks(tree: SamplingTree, oracle, samples: int, shots: int | None, seed: int):
    """Yield ``(start, factor[leaf] * (2Z - 1))`` chunk by chunk.

    ``shots=None`` uses the exact expectation in place of ``2Z - 1``.
    """
    factor = _leaf_factor(tree)
    for c, start in enumerate(range(0, samples, CHUNK)):
        size = min(CHUNK, samples - start)
        g = stream(seed, "chunk", c)
        leaves = tree.sample_many(g.random(size))
        ev = oracle(tree.leaf_payload[leaves])
        if shots is None:
            outcome = ev
        else:
            p_plus = np.clip((1.0 + ev) / 2.0, 0.0, 1.0)
            plus = (g.random((size, shots)) < p_plus[:, None]).sum(axis=1)
            outcome = 2.0 * plus / shots - 1.0
        yield start, factor[leaves] * outcome


def draws(tree: SamplingTree, state, samples: int, shots: int | None, seed: int) -> np.ndarray:
    """The individual per-sample values an estimator run with this seed averages."""
    return np.concatenate([x for _, x in _chunks(tree, _as_oracle(state), samples, shots, seed)])


def _run(tree: SamplingTree, oracle, samples: int, shots: int | None, groups: int, seed: int):
    if groups > 1 and samples < groups:
        raise EstimatorError(f"{samples} samples cannot fill {groups} median groups")
    acc = _Accumulator(samples, groups)
    for start, x in _chunks(tree, oracle, samples, shots, seed):
        acc.add(start, x)
    return acc.result()


def _identity_only(tree: SamplingTree) -> bool:
    return tree.leaf_count == 1 and tree.leaf_payload[0] == 0


def _check_tree(tree: SamplingTree, mode: str) -> None:
    if tree.mode != mode:
        raise EstimatorError(f"expected an {mode} tree, got {tree.mode}")


def _shot_estimate(tree: SamplingTree, state, cfg: EstimatorConfig, method: str) -> EstimateReport:
    m = cfg.shots_per_pauli
    if tree.mode == L1:
        bound = l1_variance_bound(tree.norm, m)
    else:
        bound = l2_variance_bound(tree.norm, tree.leaf_count, m)
    bound_t = samples_for(bound, cfg.epsilon, cfg.delta, cfg.median_groups)
    if _identity_only(tree):
        # Tr[I rho] = 1 needs no measurement
        return EstimateReport(float(tree.leaf_values[0]), 0, 0, 0.0, method, cfg.seed, cfg.epsilon, (), bound_t, tree.norm)
    t = cfg.samples if cfg.samples is not None else bound_t
    value, var, groups = _run(tree, _as_oracle(state), t, m, cfg.median_groups, cfg.seed)
    return EstimateReport(value, t, t * m, var, method, cfg.seed, cfg.epsilon, groups, bound_t, tree.norm)


def l1_operator_shadow(tree: SamplingTree, state, cfg: EstimatorConfig, method: str = "l1") -> EstimateReport:
    """Sample ``i ~ |h_i| / ||h||_1``, measure ``P_i`` M times, average ``sign(h_i)(2Z - 1)||h||_1``."""
    _check_tree(tree, L1)
    return _shot_estimate(tree, state, cfg, method)


def l2_operator_shadow(tree: SamplingTree, state, cfg: EstimatorConfig, method: str = "l2") -> EstimateReport:
    """Sample ``k ~ h_k^2 / ||h||_2^2``, measure ``P_k`` M times, average ``(2Z - 1)||h||_2^2 / h_k``."""
    _check_tree(tree, L2)
    return _shot_estimate(tree, state, cfg, method)


def perfect_l1_estimate(tree: SamplingTree, oracle, samples: int, seed: int = 0) -> EstimateReport:
    """Mean of ``sign(h_i) Tr[P_i rho] ||h||_1`` with exact expectations from ``oracle``."""
    _check_tree(tree, L1)
    value, var, _ = _run(tree, _as_oracle(oracle), samples, None, 1, seed)
    return EstimateReport(value, samples, 0, var, "perfect-l1", seed, norm=tree.norm)


def perfect_l2_estimate(tree: SamplingTree, oracle, samples: int, seed: int = 0) -> EstimateReport:
    _check_tree(tree, L2)
    value, var, _ = _run(tree, _as_oracle(oracle), samples, None, 1, seed)
    return EstimateReport(value, samples, 0, var, "perfect-l2", seed, norm=tree.norm)


def estimate_multi(
    observables: Sequence[CoefficientVector],
    state,
    epsilon: float,
    delta: float = 0.01,
    seed: int = 0,
    shots_per_pauli: int = 4,
) -> list[EstimateReport]:
    """Each observable to accuracy ``epsilon``, all simultaneously with probability ``1 - delta``.

    Every observable gets median-of-means over ``2 ceil(ln(M_obs / delta)) + 1``
    groups, each group sized for failure probability 1/4.
    """
    observables = list(observables)
    if not observables:
        raise EstimatorError("no observables given")
    n = observables[0].n
    if any(o.n != n for o in observables):
        raise EstimatorError("observables differ in qubit count")
    oracle = _as_oracle(state)
    k = median_groups_for(delta / len(observables))
    reports = []
    for j, obs in enumerate(observables):
        cfg = EstimatorConfig(
            shots_per_pauli=shots_per_pauli,
            epsilon=epsilon,
            delta=delta / len(observables),
            median_groups=k,
            seed=derive_seed(seed, "observable", j),
        )
        reports.append(l1_operator_shadow(SamplingTree.build(obs, L1), oracle, cfg))
    return reports


def estimate_linear_combination(
    weights: Sequence[float],
    observables: Sequence[CoefficientVector],
    state,
    cfg: EstimatorConfig,
) -> EstimateReport:
    """``Tr[(sum_i w_i O_i) rho]`` from one l1 tree over the merged coefficients."""
    if len(weights) != len(observables):
        raise EstimatorError(f"{len(weights)} weights for {len(observables)} observables")
    merged = combine_linear(zip(weights, observables))
    if len(merged) == 0:
        return EstimateReport(0.0, 0, 0, 0.0, "l1", cfg.seed, cfg.epsilon, (), 0, 0.0)
    return l1_operator_shadow(SamplingTree.build(merged, L1), state, cfg)


def _check_pure_target(rho_coeffs: CoefficientVector) -> None:
    purity = float(np.dot(rho_coeffs.values, rho_coeffs.values))
    if abs(purity - 2.0**-rho_coeffs.n) > PURITY_TOL:
        raise EstimatorError(f"target is not pure: sum h^2 = {purity!r}, expected 2^-{rho_coeffs.n}")


def fidelity_l2(rho_coeffs: CoefficientVector, sigma, cfg: EstimatorConfig, tree: SamplingTree | None = None) -> EstimateReport:
    """``Tr[rho sigma]`` sampling ``i`` with probability ``Tr[P_i rho]^2 / 2^n``."""
    _check_pure_target(rho_coeffs)
    tree = tree if tree is not None else SamplingTree.build(rho_coeffs, L2)
    return l2_operator_shadow(tree, sigma, cfg, method="fidelity-l2")


def fidelity_l1(rho_coeffs: CoefficientVector, sigma, cfg: EstimatorConfig, tree: SamplingTree | None = None) -> EstimateReport:
    """``Tr[rho sigma]`` as the l1 operator shadow of the observable ``rho``."""
    _check_pure_target(rho_coeffs)
    tree = tree if tree is not None else SamplingTree.build(rho_coeffs, L1)
    return l1_operator_shadow(tree, sigma, cfg, method="fidelity-l1")
