"""Classical shadows from random single-qubit Pauli measurements.

A snapshot stores, per qubit, the measured basis (1=X, 2=Y, 3=Z, the same
digits as canonical Pauli indices) and the outcome bit.  Outcome 0 is the +1
eigenvector of the measured Pauli.  Basis changes before the computational
measurement:

    X: H          Y: H S^dagger (S^dagger first, then H)          Z: identity

For a snapshot the per-qubit factor of ``Tr[P rho_hat]`` is 1 where P is the
identity, ``3 (-1)^b`` where P's letter equals the measured basis and 0
otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterator

import numpy as np

from .decompose import CoefficientVector
from .estimators import EstimateReport, EstimatorError, median_of_means
from .pauli import LETTERS, CapacityError, PauliString, index_digits
from .states import State, as_mixed

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SDG = np.diag([1, -1j])
BASIS_CHANGE = {
    1: _H,
    2: _H @ _SDG,
    3: np.eye(2, dtype=complex),
}
_U = np.stack([np.eye(2, dtype=complex), BASIS_CHANGE[1], BASIS_CHANGE[2], BASIS_CHANGE[3]])
MAX_TABLE_QUBITS = 9


@dataclass(frozen=True)
class Snapshot:
    bases: tuple[int, ...]
    outcomes: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.bases)

    def __post_init__(self):
        if len(self.bases) != len(self.outcomes):
            raise ValueError("bases and outcomes differ in length")


class SnapshotSet:
    """Columnar store of snapshots: ``bases`` and ``outcomes`` are ``(count, n)`` uint8."""

    def __init__(self, bases, outcomes):
        self.bases = np.asarray(bases, dtype=np.uint8)
        self.outcomes = np.asarray(outcomes, dtype=np.uint8)
        if self.bases.shape != self.outcomes.shape or self.bases.ndim != 2:
            raise ValueError("bases and outcomes must be equal (count, n) arrays")
        if self.bases.size and not np.isin(self.bases, (1, 2, 3)).all():
            raise ValueError("basis codes must be 1 (X), 2 (Y) or 3 (Z)")

    @property
    def n(self) -> int:
        return self.bases.shape[1]

    def __len__(self) -> int:
        return self.bases.shape[0]

    def __getitem__(self, i) -> Snapshot:
        return Snapshot(tuple(int(b) for b in self.bases[i]), tuple(int(o) for o in self.outcomes[i]))

    def __iter__(self) -> Iterator[Snapshot]:
        return (self[i] for i in range(len(self)))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SnapshotSet)
            and np.array_equal(self.bases, other.bases)
            and np.array_equal(self.outcomes, other.outcomes)
        )

    @classmethod
    def from_snapshots(cls, snaps) -> "SnapshotSet":
        snaps = list(snaps)
        return cls([s.bases for s in snaps], [s.outcomes for s in snaps])

    def __add__(self, other: "SnapshotSet") -> "SnapshotSet":
        return SnapshotSet(np.vstack([self.bases, other.bases]), np.vstack([self.outcomes, other.outcomes]))


def _rotate_batch(psi: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Apply per-row single-qubit basis changes; ``psi`` is (b, 2**n), ``codes`` (b, n)."""
    b, dim = psi.shape
    n = codes.shape[1]
    for j in range(n):
        gates = _U[codes[:, j]]
        view = psi.reshape(b, dim >> (j + 1), 2, 1 << j)
        psi = np.einsum("bik,bakc->baic", gates, view).reshape(b, dim)
    return psi


def _outcome_bits(index: np.ndarray, n: int) -> np.ndarray:
    return ((index[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def collect_snapshots(state: State, count: int, rng: np.random.Generator) -> SnapshotSet:
    """Random Pauli-basis measurements of ``count`` copies of ``state``.

    Each copy picks a mixture component by weight, draws a basis per qubit,
    rotates the component's statevector and samples one bitstring from the
    Born distribution.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    st = as_mixed(state)
    n, dim = st.n, st.dim
    weights = st.weights
    comp = rng.choice(weights.size, size=count, p=weights / weights.sum())
    bases = rng.integers(1, 4, size=(count, n), dtype=np.uint8)
    u = rng.random(count)
    outcomes = rng.integers(0, 2, size=(count, n), dtype=np.uint8)  # used for the I/2^n part
    batch = max(1, (1 << 18) // dim)
    for c, (_, s) in enumerate(st.components):
        rows = np.flatnonzero(comp == c)
        for lo in range(0, rows.size, batch):
            r = rows[lo : lo + batch]
            psi = _rotate_batch(np.broadcast_to(s.amplitudes, (r.size, dim)).copy(), bases[r])
            cdf = np.cumsum(np.abs(psi) ** 2, axis=1)
            idx = (cdf <= (u[r] * cdf[:, -1])[:, None]).sum(axis=1)
            outcomes[r] = _outcome_bits(np.minimum(idx, dim - 1), n)
    return SnapshotSet(bases, outcomes)


class ShadowTable:
    """Exact outcome distribution for every one of the ``3**n`` basis settings.

    Sampling from the table is distributionally identical to
    :func:`collect_snapshots` and much cheaper when many snapshots of one
    state are needed.  Setting ``s`` encodes qubit ``j``'s basis as base-3
    digit ``j`` (0=X, 1=Y, 2=Z).
    """

    def __init__(self, state: State):
        st = as_mixed(state)
        if st.n > MAX_TABLE_QUBITS:
            raise CapacityError(f"shadow table limited to n <= {MAX_TABLE_QUBITS}")
        self.n = n = st.n
        dim = st.dim
        probs = np.full((3**n, dim), st.mixed_weight / dim)
        for w, s in st.components:
            amp = s.amplitudes[None, :]
            for j in range(n):
                view = amp.reshape(amp.shape[0], dim >> (j + 1), 2, 1 << j)
                amp = np.einsum("gik,sakc->gsaic", _U[1:], view).reshape(-1, dim)
            probs += w * (amp.real**2 + amp.imag**2)
            del amp
        self.probabilities = probs
        cdf = np.cumsum(probs, axis=1)
        cdf /= cdf[:, -1:]
        cdf[:, -1] = 1.0
        cdf += np.arange(3**n, dtype=float)[:, None]
        self._flat_cdf = cdf.ravel()

    def sample(self, count: int, rng: np.random.Generator) -> SnapshotSet:
        n, dim = self.n, 1 << self.n
        setting = rng.integers(0, 3**n, size=count)
        u = rng.random(count)
        pos = np.searchsorted(self._flat_cdf, setting + u, side="right")
        idx = np.clip(pos - setting * dim, 0, dim - 1)
        digits = (setting[:, None] // (3 ** np.arange(n))) % 3
        return SnapshotSet((digits + 1).astype(np.uint8), _outcome_bits(idx, n))


def snapshot_pauli_expectation(p: PauliString, snap: Snapshot) -> float:
    """``Tr[P rho_hat(b)]`` for one snapshot: 0 or ``+-3**weight``."""
    if p.n != snap.n:
        raise ValueError(f"dimension mismatch: Pauli on {p.n} qubits, snapshot on {snap.n}")
    value = 1.0
    for j in range(p.n):
        d = p.digit(j)
        if d == 0:
            continue
        if d != snap.bases[j]:
            return 0.0
        value *= -3.0 if snap.outcomes[j] else 3.0
    return value


def snapshot_values(cv: CoefficientVector, snaps: SnapshotSet) -> np.ndarray:
    """``Tr[O rho_hat]`` for every snapshot, ``O = sum_i h_i P_i``."""
    if cv.n != snaps.n:
        raise ValueError(f"dimension mismatch: observable on {cv.n} qubits, snapshots on {snaps.n}")
    digits = index_digits(cv.global_indices(), cv.n)
    signed = 3.0 * (1.0 - 2.0 * snaps.outcomes)
    out = np.zeros(len(snaps))
    for h, d in zip(cv.values, digits):
        supp = np.flatnonzero(d)
        if supp.size == 0:
            out += h
            continue
        match = np.all(snaps.bases[:, supp] == d[supp], axis=1)
        out += h * match * np.prod(signed[:, supp], axis=1)
    return out


def shadow_groups_for(observable_count: int, delta: float) -> int:
    return 2 * math.ceil(math.log(2 * observable_count / delta)) + 1


def shadow_estimate(
    cv: CoefficientVector,
    snaps: SnapshotSet,
    median_groups: int = 1,
    seed: int | None = None,
    epsilon: float | None = None,
) -> EstimateReport:
    """Median of ``median_groups`` means of the per-snapshot values ``Tr[O rho_hat]``."""
    if len(snaps) == 0:
        raise EstimatorError("no snapshots")
    vals = snapshot_values(cv, snaps)
    value = median_of_means(vals, median_groups)
    var = float(vals.var(ddof=1)) if vals.size > 1 else 0.0
    groups: tuple[float, ...] = ()
    if median_groups > 1:
        size = vals.size // median_groups
        groups = tuple(float(g) for g in vals[: size * median_groups].reshape(median_groups, size).mean(axis=1))
    return EstimateReport(value, len(snaps), len(snaps), var, "classical-shadow", seed, epsilon, groups)


def dense_snapshot(snap: Snapshot) -> np.ndarray:
    """``kron_j (3 U_j^dagger |b_j><b_j| U_j - I)`` with qubit n-1 leftmost."""
    m = np.ones((1, 1), dtype=complex)
    for j in reversed(range(snap.n)):
        u = BASIS_CHANGE[snap.bases[j]]
        ket = u.conj().T[:, snap.outcomes[j]]
        m = np.kron(m, 3 * np.outer(ket, ket.conj()) - np.eye(2))
    return m


def brute_force_snapshot_mean(state: State, n: int | None = None) -> np.ndarray:
    """Exact average of dense snapshots over all bases and outcomes (n <= 2)."""
    n = state.n if n is None else n
    if n > 2:
        raise CapacityError("exhaustive snapshot enumeration limited to n <= 2")
    rho = state.density_matrix()
    dim = 1 << n
    mean = np.zeros((dim, dim), dtype=complex)
    for bases in product((1, 2, 3), repeat=n):
        u = np.ones((1, 1), dtype=complex)
        for j in reversed(range(n)):
            u = np.kron(u, BASIS_CHANGE[bases[j]])
        born = np.real(np.diag(u @ rho @ u.conj().T))
        for b in range(dim):
            outs = tuple((b >> j) & 1 for j in range(n))
            mean += born[b] / 3**n * dense_snapshot(Snapshot(bases, outs))
    return mean


# text format: one line per snapshot, "<bases> <bits>", qubit n-1 leftmost


def format_snapshots(snaps: SnapshotSet) -> str:
    lines = []
    for b, o in zip(snaps.bases, snaps.outcomes):
        lines.append("".join(LETTERS[x] for x in b[::-1]) + " " + "".join(str(x) for x in o[::-1]))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_snapshots(text: str) -> SnapshotSet:
    bases, outs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            bs, os_ = line.split()
            b = [LETTERS.index(ch) for ch in bs[::-1]]
            o = [int(ch) for ch in os_[::-1]]
        except ValueError:
            raise ValueError(f"line {lineno}: malformed snapshot {raw!r}") from None
        if len(b) != len(o) or not all(x in (1, 2, 3) for x in b) or not all(x in (0, 1) for x in o):
            raise ValueError(f"line {lineno}: malformed snapshot {raw!r}")
        bases.append(b)
        outs.append(o)
    if not bases:
        return SnapshotSet(np.zeros((0, 0)), np.zeros((0, 0)))
    return SnapshotSet(bases, outs)


def write_snapshots(path: str | Path, snaps: SnapshotSet) -> None:
    Path(path).write_text(format_snapshots(snaps))


def read_snapshots(path: str | Path) -> SnapshotSet:
    return parse_snapshots(Path(path).read_text())
