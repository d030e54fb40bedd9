"""Small-n quantum states as a source of exact expectations and Pauli measurement shots.

States are either pure statevectors or convex mixtures of pure states with an
optional maximally mixed part ``I / 2**n`` that is kept as a weight rather
than expanded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .pauli import (
    MAX_DENSE_QUBITS,
    CapacityError,
    PauliString,
    WeightedPauliSum,
    index_to_masks,
    popcount,
    sum_to_dense,
)

NORM_TOL = 1e-10
WEIGHT_TOL = 1e-12
STATE_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class PureState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DENSE_QUBITS:
            raise CapacityError(f"statevectors limited to 1 <= n <= {MAX_DENSE_QUBITS}, got {self.n}")
        a = np.array(self.amplitudes, dtype=complex).ravel()
        if a.size != 1 << self.n:
            raise ValueError(f"{a.size} amplitudes for {self.n} qubits")
        norm = float(np.vdot(a, a).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalised: <psi|psi> = {norm!r}")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class MixedState:
    """``rho = sum_c w_c |psi_c><psi_c| + mixed_weight * I / 2**n``."""

    n: int
    components: tuple[tuple[float, PureState], ...] = field(default_factory=tuple)
    mixed_weight: float = 0.0

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components if w != 0)
        for w, s in comps:
            if not 0 < w <= 1:
                raise ValueError(f"component weight {w} outside (0, 1]")
            if s.n != self.n:
                raise ValueError(f"component has {s.n} qubits, expected {self.n}")
        if not 0 <= self.mixed_weight <= 1:
            raise ValueError(f"mixed weight {self.mixed_weight} outside [0, 1]")
        total = sum(w for w, _ in comps) + self.mixed_weight
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"mixture weights sum to {total!r}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "mixed_weight", float(self.mixed_weight))

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def weights(self) -> np.ndarray:
        """Component weights followed by the maximally mixed weight."""
        return np.array([w for w, _ in self.components] + [self.mixed_weight])

    def density_matrix(self) -> np.ndarray:
        rho = self.mixed_weight * np.eye(self.dim, dtype=complex) / self.dim
        for w, s in self.components:
            rho += w * s.density_matrix()
        return rho


State = Union[PureState, MixedState]


def as_mixed(state: State) -> MixedState:
    if isinstance(state, MixedState):
        return state
    return MixedState(state.n, ((1.0, state),))


def density_matrix(state: State) -> np.ndarray:
    return state.density_matrix()


def mixture(parts: Sequence[tuple[float, State]]) -> MixedState:
    """Flatten a convex combination of states into one :class:`MixedState`."""
    comps: list[tuple[float, PureState]] = []
    mixed = 0.0
    n = parts[0][1].n
    for w, s in parts:
        s = as_mixed(s)
        if s.n != n:
            raise ValueError("mixture components differ in qubit count")
        comps += [(w * cw, cs) for cw, cs in s.components]
        mixed += w * s.mixed_weight
    return MixedState(n, tuple(comps), mixed)


# expectations


def _pure_expectations(a: np.ndarray, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    dim = a.size
    j = np.arange(dim, dtype=np.int64)
    out = np.empty(x.size)
    chunk = max(1, (1 << 20) // dim)
    for s in range(0, x.size, chunk):
        xs, zs = x[s : s + chunk, None], z[s : s + chunk, None]
        # <psi|P|psi> = sum_j conj(a[j ^ x]) phase(j) a[j]
        sign = 1.0 - 2.0 * (popcount(zs & j) & 1)
        terms = np.conj(a[j ^ xs]) * a * sign
        ipow = np.array([1, 1j, -1, -1j])[popcount(xs & zs)[:, 0] % 4]
        out[s : s + chunk] = (ipow * terms.sum(axis=1)).real
    return out


def expectations(indices, state: State) -> np.ndarray:
    """Exact ``Tr[P_i rho]`` for an array of canonical Pauli indices."""
    st = as_mixed(state)
    idx = np.asarray(indices, dtype=np.int64).ravel()
    x, z = index_to_masks(idx, st.n)
    out = np.where(idx == 0, st.mixed_weight, 0.0)
    for w, s in st.components:
        out += w * _pure_expectations(s.amplitudes, x, z)
    return out


def expectation(p: PauliString, state: State) -> float:
    if p.n != state.n:
        raise ValueError(f"dimension mismatch: Pauli on {p.n} qubits, state on {state.n}")
    return float(expectations([p.index], state)[0])


def sum_expectation(w: WeightedPauliSum, state: State) -> float:
    return float(np.dot(w.coefficients, expectations(w.indices, state)))


class ExpectationOracle:
    """Memoised ``i -> Tr[P_i rho]`` over canonical indices of one state."""

    def __init__(self, state: State):
        self.state = state
        self.n = state.n
        self._cache = np.full(4**self.n, np.nan)

    def __call__(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        vals = self._cache[idx]
        missing = np.isnan(vals)
        if missing.any():
            todo = np.unique(idx[missing])
            self._cache[todo] = expectations(todo, self.state)
            vals = self._cache[idx]
        return vals


# measurement


def measure_pauli_shot(p: PauliString, state: State, rng: np.random.Generator) -> int:
    """One projective measurement of ``p``; returns +1 or -1."""
    if p.n != state.n:
        raise ValueError(f"dimension mismatch: Pauli on {p.n} qubits, state on {state.n}")
    st = as_mixed(state)
    c = rng.choice(len(st.components) + 1, p=st.weights / st.weights.sum())
    if c == len(st.components):
        ev = 1.0 if p.index == 0 else 0.0
    else:
        ev = expectation(p, st.components[c][1])
    return 1 if rng.random() < (1.0 + ev) / 2.0 else -1


# state constructors


def basis_state(n: int, j: int) -> PureState:
    a = np.zeros(1 << n, dtype=complex)
    a[j] = 1.0
    return PureState(n, a)


def maximally_mixed(n: int) -> MixedState:
    return MixedState(n, (), 1.0)


def haar_random_state(n: int, rng: np.random.Generator) -> PureState:
    """Normalised complex Gaussian vector, i.e. a Haar-random pure state."""
    if not 1 <= n <= MAX_DENSE_QUBITS:
        raise CapacityError(f"n must be in [1, {MAX_DENSE_QUBITS}]")
    g = rng.standard_normal((2, 1 << n))
    a = g[0] + 1j * g[1]
    return PureState(n, a / np.linalg.norm(a))


def depolarize(state: PureState, lam: float) -> MixedState:
    """``(1 - lam) |psi><psi| + lam I / 2**n``."""
    if not 0 <= lam <= 1:
        raise ValueError(f"depolarizing strength {lam} outside [0, 1]")
    return MixedState(state.n, ((1.0 - lam, state),), lam)


def ghz_state(n: int) -> PureState:
    a = np.zeros(1 << n, dtype=complex)
    a[0] = a[-1] = 1 / np.sqrt(2)
    return PureState(n, a)


def fidelity_with_pure(target: PureState, state: State) -> float:
    """``Tr[rho sigma]`` for pure ``rho = |psi><psi|``."""
    st = as_mixed(state)
    f = st.mixed_weight / st.dim
    for w, s in st.components:
        f += w * abs(np.vdot(target.amplitudes, s.amplitudes)) ** 2
    return float(f)


# rotated surface code, n = 9, qubits labelled 1..9 row by row

SURFACE_X_GENERATORS = ((2, 3), (1, 2, 4, 5), (5, 6, 8, 9), (7, 8))
SURFACE_Z_GENERATORS = ((1, 4), (2, 3, 5, 6), (4, 5, 7, 8), (6, 9))


@dataclass(frozen=True)
class SurfaceCodeSpec:
    n: int
    x_generators: tuple[PauliString, ...]
    z_generators: tuple[PauliString, ...]
    weights: tuple[float, ...]

    @property
    def generators(self) -> tuple[PauliString, ...]:
        """X-type generators first, then Z-type; aligned with ``weights``."""
        return self.x_generators + self.z_generators

    def all_commute(self) -> bool:
        g = self.generators
        return all(a.commutes(b) for i, a in enumerate(g) for b in g[i + 1 :])


def _product(n: int, labels: Sequence[int], kind: str) -> PauliString:
    mask = 0
    for q in labels:
        mask |= 1 << (q - 1)
    return PauliString(n, mask, 0) if kind == "X" else PauliString(n, 0, mask)


def surface_code_hamiltonian(weights: Sequence[float] | None = None) -> tuple[WeightedPauliSum, SurfaceCodeSpec]:
    """``H = -sum_g w_g g`` over the 8 generators of the distance-3 rotated code.

    Qubit label ``q`` (1-based) maps to bit ``q - 1``.  ``weights`` follow
    :attr:`SurfaceCodeSpec.generators` order; None means unit weights.
    """
    n = 9
    xs = tuple(_product(n, g, "X") for g in SURFACE_X_GENERATORS)
    zs = tuple(_product(n, g, "Z") for g in SURFACE_Z_GENERATORS)
    if weights is None:
        weights = [1.0] * 8
    weights = tuple(float(w) for w in weights)
    if len(weights) != 8:
        raise ValueError(f"expected 8 generator weights, got {len(weights)}")
    spec = SurfaceCodeSpec(n, xs, zs, weights)
    if not spec.all_commute():
        raise AssertionError("surface code generators do not commute")
    h = WeightedPauliSum.from_terms(n, [(-w, g) for w, g in zip(weights, spec.generators)])
    return h, spec


def ground_state(h: WeightedPauliSum, degeneracy_tol: float = 1e-8) -> tuple[PureState, float]:
    """Lowest eigenpair of ``h`` by dense diagonalisation.

    A degenerate ground space is resolved deterministically: project the
    computational basis state with the largest overlap onto the space, then
    make its first non-negligible amplitude real and positive.
    """
    if h.n > MAX_DENSE_QUBITS:
        raise CapacityError(f"dense diagonalisation limited to n <= {MAX_DENSE_QUBITS}")
    mat = sum_to_dense(h)
    evals, evecs = np.linalg.eigh(mat)
    e0 = float(evals[0])
    sub = evecs[:, evals <= e0 + degeneracy_tol * max(1.0, abs(e0))]
    overlap = np.round(np.sum(np.abs(sub) ** 2, axis=1), 9)
    j = int(np.argmax(overlap))
    v = sub @ sub[j].conj()
    v /= np.linalg.norm(v)
    first = int(np.argmax(np.abs(v) > 1e-9))
    v *= np.conj(v[first]) / abs(v[first])
    state = PureState(h.n, v)
    energy = float(np.vdot(v, mat @ v).real)
    return state, energy


# serialisation: JSON text, floats written with repr so round trips are exact


def state_to_dict(state: State) -> dict:
    st = as_mixed(state)
    return {
        "format": "opshadow-state",
        "version": STATE_FORMAT_VERSION,
        "n": st.n,
        "maximally_mixed_weight": st.mixed_weight,
        "components": [
            {"weight": w, "re": s.amplitudes.real.tolist(), "im": s.amplitudes.imag.tolist()}
            for w, s in st.components
        ],
    }


def state_from_dict(d: dict) -> MixedState:
    if d.get("version") != STATE_FORMAT_VERSION:
        raise ValueError(f"unsupported state format version {d.get('version')!r}")
    n = int(d["n"])
    comps = tuple(
        (c["weight"], PureState(n, np.asarray(c["re"]) + 1j * np.asarray(c["im"]))) for c in d["components"]
    )
    return MixedState(n, comps, d["maximally_mixed_weight"])


def save_state(path: str | Path, state: State) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state)) + "\n")


def load_state(path: str | Path) -> MixedState:
    return state_from_dict(json.loads(Path(path).read_text()))
