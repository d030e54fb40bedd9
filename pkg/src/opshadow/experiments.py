"""Budget sweeps: fidelity estimation, surface-code energy, generic comparisons.

A sweep runs every method at every total-shot budget ``repetitions`` times
and records the mean absolute error against an exact reference and the
fraction of runs with error >= epsilon.  Operator-shadow runs spend
``T * M`` shots with ``T = budget // M``; classical-shadow runs spend one
shot per snapshot.

All randomness is derived from ``seed`` by name, e.g. the l1 run at budget
1000, repetition 3 of the fidelity experiment uses
``("fidelity", "l1", 1000, 3)``, so adding a method leaves the others' draws
unchanged.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .decompose import CoefficientVector, decompose
from .estimators import (
    EstimatorConfig,
    estimate_linear_combination,
    fidelity_l1,
    fidelity_l2,
    l1_operator_shadow,
    l1_variance_bound,
    l2_operator_shadow,
    samples_for,
)
from .pauli import WeightedPauliSum, sum_to_dense
from .rng import derive_seed, stream
from .sampler import L1, L2, SamplingTree
from .shadow import ShadowTable, collect_snapshots, shadow_estimate
from .states import (
    ExpectationOracle,
    MixedState,
    State,
    depolarize,
    ground_state,
    haar_random_state,
    mixture,
    surface_code_hamiltonian,
)

CSV_HEADER = ("method", "budget", "abs_error_mean", "failure_prob", "reps", "reference")
DEFAULT_BUDGETS = (1000, 3000, 10000, 30000, 100000)
EXPERIMENTS = ("fidelity", "surface-code", "compare", "estimate", "decompose")
METHODS = ("l1", "l2", "shadow")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "fidelity"
    n: int = 8
    epsilon: float = 0.03
    budgets: tuple[int, ...] = DEFAULT_BUDGETS
    repetitions: int = 100
    methods: tuple[str, ...] = ("l1", "l2")
    seed: int = 0
    output_path: str | None = None
    resample_haar: bool = False
    shots_per_pauli: int = 4
    depolarizing: float = 0.1
    haar_weight: float = 0.1
    unit_weights: bool = False
    shadow_groups: int = 1
    # if set, also run at the budget where the Chebyshev bound on l1 failure equals this
    theorem_failure: float | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        budgets = tuple(int(b) for b in self.budgets)
        if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
            raise ValueError(f"budgets must be strictly increasing: {budgets}")
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "methods", tuple(self.methods))
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def for_experiment(cls, experiment: str, **kw) -> "ExperimentConfig":
        defaults: dict = {"experiment": experiment}
        if experiment == "fidelity":
            defaults.update(n=8, epsilon=0.03, methods=("l1", "l2"))
        elif experiment == "surface-code":
            defaults.update(n=9, epsilon=0.04, methods=("l1", "shadow"))
        elif experiment == "compare":
            defaults.update(epsilon=0.05, methods=("l1", "l2", "shadow"))
        defaults.update({k: v for k, v in kw.items() if v is not None})
        return cls(**defaults)


@dataclass(frozen=True)
class SweepRow:
    method: str
    budget: int
    abs_error_mean: float
    failure_prob: float
    reps: int
    reference: float


@dataclass
class SweepResult:
    config: ExperimentConfig
    reference: float
    rows: list[SweepRow]
    values: dict[str, dict[int, list[float]]] = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def row(self, method: str, budget: int) -> SweepRow:
        for r in self.rows:
            if r.method == method and r.budget == budget:
                return r
        raise KeyError((method, budget))

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "reference": self.reference,
            "info": self.info,
            "rows": [asdict(r) for r in self.rows],
            "values": {m: {str(b): v for b, v in per.items()} for m, per in self.values.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.method, r.budget, repr(r.abs_error_mean), repr(r.failure_prob), r.reps, repr(r.reference)])
        return buf.getvalue()

    def write(self, path: str | Path) -> tuple[Path, Path]:
        """Write ``<path>`` (JSON) and the same stem with ``.csv``."""
        path = Path(path)
        if path.suffix != ".json":
            path = path.with_suffix(".json")
        path.parent.mkdir(parents=True, exist_ok=True)
        csv_path = path.with_suffix(".csv")
        path.write_text(self.to_json())
        csv_path.write_text(self.to_csv())
        return path, csv_path


Runner = Callable[[int, int], float]


def sweep(
    cfg: ExperimentConfig,
    runners: dict[str, Runner],
    reference: float | Sequence[float],
    budgets: Sequence[int] | None = None,
) -> SweepResult:
    """Run ``runners[method](budget, rep)`` over the grid and summarise errors.

    ``reference`` is one exact value, or one per repetition.
    """
    budgets = tuple(cfg.budgets if budgets is None else budgets)
    refs = np.broadcast_to(np.asarray(reference, dtype=float), (cfg.repetitions,))
    rows, values = [], {}
    for method in cfg.methods:
        values[method] = {}
        for b in budgets:
            v = np.array([runners[method](b, r) for r in range(cfg.repetitions)])
            err = np.abs(v - refs)
            rows.append(
                SweepRow(method, b, float(err.mean()), float(np.mean(err >= cfg.epsilon)), cfg.repetitions, float(refs.mean()))
            )
            values[method][b] = v.tolist()
    return SweepResult(cfg, float(refs.mean()), rows, values)


def samples_in_budget(budget: int, shots_per_pauli: int) -> int:
    t = budget // shots_per_pauli
    if t < 1:
        raise ValueError(f"budget {budget} is smaller than one trial of {shots_per_pauli} shots")
    return t


def theorem_budget(l1: float, epsilon: float, failure: float, shots_per_pauli: int = 4) -> int:
    """Total shots at which the l1 Chebyshev bound on failure equals ``failure``."""
    return shots_per_pauli * samples_for(l1_variance_bound(l1, shots_per_pauli), epsilon, failure)


def _budgets_with_theorem(cfg: ExperimentConfig, l1: float) -> tuple[int, ...]:
    budgets = list(cfg.budgets)
    if cfg.theorem_failure is not None:
        budgets.append(theorem_budget(l1, cfg.epsilon, cfg.theorem_failure, cfg.shots_per_pauli))
    return tuple(sorted(set(budgets)))


def operator_runner(
    cfg: ExperimentConfig, tree: SamplingTree, oracle, tag: str, method: str, estimator=None
) -> Runner:
    est = estimator or (l1_operator_shadow if tree.mode == L1 else l2_operator_shadow)

    def run(budget: int, rep: int) -> float:
        ec = EstimatorConfig(
            samples=samples_in_budget(budget, cfg.shots_per_pauli),
            shots_per_pauli=cfg.shots_per_pauli,
            epsilon=cfg.epsilon,
            seed=derive_seed(cfg.seed, tag, method, budget, rep),
        )
        return est(tree, oracle, ec).value

    return run


def shadow_runner(cfg: ExperimentConfig, cv: CoefficientVector, table_for: Callable[[int], ShadowTable], tag: str) -> Runner:
    def run(budget: int, rep: int) -> float:
        snaps = table_for(rep).sample(budget, stream(cfg.seed, tag, "shadow", budget, rep))
        return shadow_estimate(cv, snaps, cfg.shadow_groups).value

    return run


def dense_expectation(obs: np.ndarray, state: State) -> float:
    return float(np.trace(obs @ state.density_matrix()).real)


# fidelity estimation


def run_fidelity_experiment(cfg: ExperimentConfig) -> SweepResult:
    """Haar target, depolarized copy, l1 vs l2 fidelity estimation."""
    bad = set(cfg.methods) - {"l1", "l2"}
    if bad:
        raise ValueError(f"fidelity experiment supports l1 and l2 only, got {sorted(bad)}")
    target = haar_random_state(cfg.n, stream(cfg.seed, "fidelity", "target"))
    sigma = depolarize(target, cfg.depolarizing)
    rho = target.density_matrix()
    coeffs = decompose(rho, cfg.n)
    reference = float(np.trace(rho @ sigma.density_matrix()).real)
    oracle = ExpectationOracle(sigma)
    trees = {"l1": SamplingTree.build(coeffs, L1), "l2": SamplingTree.build(coeffs, L2)}
    wrap = {
        "l1": lambda t, o, c: fidelity_l1(coeffs, o, c, tree=t),
        "l2": lambda t, o, c: fidelity_l2(coeffs, o, c, tree=t),
    }
    runners = {m: operator_runner(cfg, trees[m], oracle, "fidelity", m, wrap[m]) for m in cfg.methods}
    budgets = _budgets_with_theorem(cfg, coeffs.l1)
    for b in budgets:
        samples_in_budget(b, cfg.shots_per_pauli)
    result = sweep(cfg, runners, reference, budgets)
    result.info = {
        "l1_norm": coeffs.l1,
        "l2_norm": coeffs.l2,
        "pauli_terms": len(coeffs),
        "budgets": list(budgets),
        "mixture_formula": 1 - cfg.depolarizing + cfg.depolarizing / 2**cfg.n,
    }
    return result


# surface code energy


def surface_code_setup(cfg: ExperimentConfig):
    """Hamiltonian, its generators as observables, weights, ground state."""
    if cfg.n != 9:
        raise ValueError("the surface-code experiment is defined for n = 9")
    weights = None if cfg.unit_weights else stream(cfg.seed, "surface-code", "weights").standard_normal(8)
    h, spec = surface_code_hamiltonian(weights)
    g0, e0 = ground_state(h)
    gens = [CoefficientVector.from_pauli(g) for g in spec.generators]
    return h, spec, gens, g0, e0


def surface_code_state(cfg: ExperimentConfig, g0, rep: int | None = None) -> MixedState:
    key = ("haar",) if rep is None else ("haar", rep)
    haar = haar_random_state(9, stream(cfg.seed, "surface-code", *key))
    return mixture([(1 - cfg.haar_weight, g0), (cfg.haar_weight, haar)])


def run_surface_code_experiment(cfg: ExperimentConfig) -> SweepResult:
    """Energy of ``0.9 rho_0 + 0.1 rho_Haar``: l1 operator shadow vs classical shadow."""
    bad = set(cfg.methods) - {"l1", "shadow"}
    if bad:
        raise ValueError(f"surface-code experiment supports l1 and shadow only, got {sorted(bad)}")
    h, spec, gens, g0, e0 = surface_code_setup(cfg)
    h_dense = sum_to_dense(h)
    h_cv = CoefficientVector.from_sum(h)

    if cfg.resample_haar:
        states = {}

        def state_for(rep):
            if rep not in states:
                states.clear()
                states[rep] = surface_code_state(cfg, g0, rep)
            return states[rep]

        refs = [dense_expectation(h_dense, surface_code_state(cfg, g0, r)) for r in range(cfg.repetitions)]
        tables: dict[int, ShadowTable] = {}

        def table_for(rep):
            if rep not in tables:
                tables.clear()
                tables[rep] = ShadowTable(state_for(rep))
            return tables[rep]

        oracles: dict[int, ExpectationOracle] = {}

        def oracle_for(rep):
            if rep not in oracles:
                oracles.clear()
                oracles[rep] = ExpectationOracle(state_for(rep))
            return oracles[rep]

        reference: float | list[float] = refs
    else:
        rho = surface_code_state(cfg, g0)
        reference = dense_expectation(h_dense, rho)
        table = ShadowTable(rho) if "shadow" in cfg.methods else None
        table_for = lambda rep: table  # noqa: E731
        oracle = ExpectationOracle(rho)
        oracle_for = lambda rep: oracle  # noqa: E731
    coef = [-w for w in spec.weights]

    def l1_run(budget: int, rep: int) -> float:
        ec = EstimatorConfig(
            samples=samples_in_budget(budget, cfg.shots_per_pauli),
            shots_per_pauli=cfg.shots_per_pauli,
            epsilon=cfg.epsilon,
            seed=derive_seed(cfg.seed, "surface-code", "l1", budget, rep),
        )
        return estimate_linear_combination(coef, gens, oracle_for(rep), ec).value

    runners = {"l1": l1_run}
    if "shadow" in cfg.methods:
        runners["shadow"] = shadow_runner(cfg, h_cv, table_for, "surface-code")
    budgets = _budgets_with_theorem(cfg, h_cv.l1)
    for b in budgets:
        samples_in_budget(b, cfg.shots_per_pauli)
    result = sweep(cfg, runners, reference, budgets)
    result.info = {
        "weights": list(spec.weights),
        "ground_energy": e0,
        "l1_norm": h_cv.l1,
        "budgets": list(budgets),
    }
    return result


# generic comparison on a user observable and state


def run_compare(cfg: ExperimentConfig, observable: WeightedPauliSum, state: State) -> SweepResult:
    cv = CoefficientVector.from_sum(observable)
    oracle = ExpectationOracle(state)
    reference = dense_expectation(sum_to_dense(observable), state)
    runners: dict[str, Runner] = {}
    if "l1" in cfg.methods:
        runners["l1"] = operator_runner(cfg, SamplingTree.build(cv, L1), oracle, "compare", "l1")
    if "l2" in cfg.methods:
        runners["l2"] = operator_runner(cfg, SamplingTree.build(cv, L2), oracle, "compare", "l2")
    if "shadow" in cfg.methods:
        if state.n <= 9:
            table = ShadowTable(state)
            runners["shadow"] = shadow_runner(cfg, cv, lambda rep: table, "compare")
        else:

            def run(budget, rep):
                snaps = collect_snapshots(state, budget, stream(cfg.seed, "compare", "shadow", budget, rep))
                return shadow_estimate(cv, snaps, cfg.shadow_groups).value

            runners["shadow"] = run
    budgets = _budgets_with_theorem(cfg, cv.l1)
    result = sweep(cfg, runners, reference, budgets)
    result.info = {"l1_norm": cv.l1, "l2_norm": cv.l2, "pauli_terms": len(cv), "budgets": list(budgets)}
    return result


def shadow_snapshot_count(locality: int, spectral_norm: float, epsilon: float, delta: float) -> int:
    """Chebyshev snapshot count from the ``4**k ||O||^2`` single-snapshot variance bound."""
    return max(1, math.ceil(4**locality * spectral_norm**2 / (delta * epsilon**2)))
