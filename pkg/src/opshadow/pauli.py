"""Bit-mask Pauli strings and weighted Pauli sums.

A Pauli string on ``n`` qubits is stored as two ``n``-bit integers ``(x, z)``:
bit ``j`` of ``x`` is set for X or Y on qubit ``j`` and bit ``j`` of ``z`` for
Z or Y.  Qubit 0 is the least significant bit of a computational basis index
and the rightmost character of a label, so ``"XZ"`` is Z on qubit 0 and X on
qubit 1.

The canonical index is the base-4 integer ``sum_j d_j 4**j`` with
I=0, X=1, Y=2, Z=3.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 16
MAX_DENSE_QUBITS = 10

LETTERS = "IXYZ"
# digit -> (x bit, z bit)
_DIGIT_XZ = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
_XZ_DIGIT = {v: k for k, v in _DIGIT_XZ.items()}

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_I_POWERS = (1, 1j, -1, -1j)


class CapacityError(ValueError):
    """Requested size exceeds what the dense or bit-mask representation supports."""


def _check_n(n: int, cap: int = MAX_QUBITS) -> None:
    if not 1 <= n <= cap:
        raise CapacityError(f"qubit count {n} outside [1, {cap}]")


def popcount(v):
    """Bit count for Python ints or integer numpy arrays."""
    if isinstance(v, (int, np.integer)):
        return int(v).bit_count()
    v = np.asarray(v, dtype=np.uint64)
    return np.bitwise_count(v).astype(np.int64)


@dataclass(frozen=True, order=True)
class PauliString:
    """Immutable n-qubit Pauli string in symplectic form."""

    n: int
    x: int
    z: int

    def __post_init__(self):
        _check_n(self.n)
        lim = 1 << self.n
        if not (0 <= self.x < lim and 0 <= self.z < lim):
            raise ValueError(f"masks out of range for n={self.n}: x={self.x}, z={self.z}")

    @classmethod
    def from_index(cls, n: int, idx: int) -> "PauliString":
        _check_n(n)
        if not 0 <= idx < 4**n:
            raise IndexError(f"Pauli index {idx} outside [0, 4**{n})")
        x = z = 0
        for j in range(n):
            xb, zb = _DIGIT_XZ[(idx >> (2 * j)) & 3]
            x |= xb << j
            z |= zb << j
        return cls(n, x, z)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        label = label.strip().upper()
        n = len(label)
        _check_n(n)
        x = z = 0
        for pos, ch in enumerate(label):
            if ch not in LETTERS:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}")
            j = n - 1 - pos
            xb, zb = _DIGIT_XZ[LETTERS.index(ch)]
            x |= xb << j
            z |= zb << j
        return cls(n, x, z)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0)

    def digit(self, j: int) -> int:
        return _XZ_DIGIT[((self.x >> j) & 1, (self.z >> j) & 1)]

    @property
    def index(self) -> int:
        return sum(self.digit(j) << (2 * j) for j in range(self.n))

    @property
    def label(self) -> str:
        return "".join(LETTERS[self.digit(j)] for j in reversed(range(self.n)))

    @property
    def weight(self) -> int:
        return popcount(self.x | self.z)

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(j for j in range(self.n) if (m >> j) & 1)

    def apply(self, j: int) -> tuple[int, complex]:
        """Return ``(j_out, phase)`` with ``P|j> = phase |j_out>``."""
        if not 0 <= j < (1 << self.n):
            raise IndexError(f"basis index {j} out of range for n={self.n}")
        k = popcount(self.x & self.z) + 2 * popcount(self.z & j)
        return j ^ self.x, _I_POWERS[k % 4]

    def commutes(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n} qubits")
        return (popcount(self.x & other.z) + popcount(self.z & other.x)) % 2 == 0

    def to_dense(self) -> np.ndarray:
        _check_n(self.n, MAX_DENSE_QUBITS)
        m = np.ones((1, 1), dtype=complex)
        for ch in self.label:
            m = np.kron(m, _SINGLE[ch])
        return m

    def __str__(self) -> str:
        return self.label


def pauli_from_index(n: int, idx: int) -> PauliString:
    return PauliString.from_index(n, idx)


def pauli_to_index(p: PauliString) -> int:
    return p.index


def pauli_apply_basis(p: PauliString, j: int) -> tuple[int, complex]:
    return p.apply(j)


def commutes(p: PauliString, q: PauliString) -> bool:
    return p.commutes(q)


def index_to_masks(indices, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised canonical index -> (x_mask, z_mask) arrays."""
    idx = np.asarray(indices, dtype=np.int64)
    x = np.zeros(idx.shape, dtype=np.int64)
    z = np.zeros(idx.shape, dtype=np.int64)
    for j in range(n):
        d = (idx >> (2 * j)) & 3
        x |= ((d == 1) | (d == 2)).astype(np.int64) << j
        z |= ((d == 2) | (d == 3)).astype(np.int64) << j
    return x, z


def masks_to_index(x, z, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    idx = np.zeros(np.broadcast(x, z).shape, dtype=np.int64)
    # keyed by 2*x_bit + z_bit
    lut = np.array([0, 3, 1, 2], dtype=np.int64)
    for j in range(n):
        xb = (x >> j) & 1
        zb = (z >> j) & 1
        idx |= lut[2 * xb + zb] << (2 * j)
    return idx


def index_digits(indices, n: int) -> np.ndarray:
    """Per-qubit digits, shape ``indices.shape + (n,)``; column j is qubit j."""
    idx = np.asarray(indices, dtype=np.int64)
    shifts = 2 * np.arange(n, dtype=np.int64)
    return (idx[..., None] >> shifts) & 3


@dataclass(frozen=True)
class WeightedPauliSum:
    """Observable ``sum_i c_i P_i`` with real coefficients, sorted by canonical index."""

    n: int
    terms: tuple[tuple[float, PauliString], ...] = field(default_factory=tuple)

    def __post_init__(self):
        _check_n(self.n)
        merged: dict[int, tuple[float, PauliString]] = {}
        for c, p in self.terms:
            c = float(np.real_if_close(c))
            if not np.isfinite(c):
                raise ValueError(f"non-finite coefficient {c} on {p}")
            if p.n != self.n:
                raise ValueError(f"term {p} has {p.n} qubits, expected {self.n}")
            if p.index in merged:
                raise ValueError(f"duplicate Pauli string {p}")
            merged[p.index] = (c, p)
        object.__setattr__(self, "terms", tuple(merged[k] for k in sorted(merged)))

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[float, PauliString | str]]) -> "WeightedPauliSum":
        acc: dict[int, list] = {}
        for c, p in terms:
            if isinstance(p, str):
                p = PauliString.from_label(p)
            if p.index in acc:
                acc[p.index][0] += c
            else:
                acc[p.index] = [c, p]
        return cls(n, tuple((c, p) for c, p in acc.values()))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    @property
    def indices(self) -> np.ndarray:
        return np.array([p.index for _, p in self.terms], dtype=np.int64)

    @property
    def l1(self) -> float:
        return float(np.abs(self.coefficients).sum())

    @property
    def l2(self) -> float:
        return float(np.sqrt((self.coefficients**2).sum()))

    def __len__(self) -> int:
        return len(self.terms)


def sum_to_dense(w: WeightedPauliSum) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``w``, built from the sparse basis action."""
    _check_n(w.n, MAX_DENSE_QUBITS)
    dim = 1 << w.n
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim, dtype=np.int64)
    for c, p in w.terms:
        rows = cols ^ p.x
        k = (popcount(p.x & p.z) + 2 * popcount(cols & p.z)) % 4
        out[rows, cols] += c * np.asarray(_I_POWERS)[k]
    return out


def pauli_matrix_from_action(p: PauliString) -> np.ndarray:
    """Dense matrix assembled one column at a time from :meth:`PauliString.apply`."""
    dim = 1 << p.n
    m = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        jo, ph = p.apply(j)
        m[jo, j] = ph
    return m


def parse_labels(labels: Sequence[str]) -> list[PauliString]:
    return [PauliString.from_label(s) for s in labels]
