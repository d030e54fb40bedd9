"""Pauli coefficients of Hermitian observables.

Coefficients are ``h_i = Tr[P_i O] / 2**n``.  Every trace uses the fact that a
Pauli string has exactly one nonzero entry per column: with
``P|k> = phase(k)|k ^ x>`` one gets ``Tr[P O] = sum_k phase(k) O[k, k ^ x]``,
which costs ``O(2**n)`` per string and ``O(2**(3n))`` for the full sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .pauli import (
    MAX_DENSE_QUBITS,
    CapacityError,
    PauliString,
    WeightedPauliSum,
    index_digits,
    masks_to_index,
    popcount,
    sum_to_dense,
)

HERMITIAN_RTOL = 1e-10
IMAG_TOL = 1e-10
PRUNE_RTOL = 1e-12
MAX_SWEEP_QUBITS = 8


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Sparse Pauli coefficients.

    ``indices`` are canonical indices over ``support`` (local qubit ``m`` is
    global qubit ``support[m]``) or over all ``n`` qubits when ``support`` is
    None.  Entries are sorted by index and never zero.
    """

    n: int
    indices: np.ndarray
    values: np.ndarray
    support: tuple[int, ...] | None = None
    l1: float = field(init=False)
    l2: float = field(init=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        val = np.asarray(self.values, dtype=float).ravel()
        if idx.shape != val.shape:
            raise ValueError("indices and values differ in length")
        if not np.all(np.isfinite(val)):
            raise ValueError("non-finite coefficient")
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        if idx.size and np.any(np.diff(idx) == 0):
            raise ValueError("duplicate Pauli index")
        k = self.n if self.support is None else len(self.support)
        if idx.size and (idx[0] < 0 or idx[-1] >= 4**k):
            raise IndexError("Pauli index out of range")
        idx.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)
        object.__setattr__(self, "l1", float(np.abs(val).sum()))
        object.__setattr__(self, "l2", float(np.sqrt(np.dot(val, val))))

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def k(self) -> int:
        return self.n if self.support is None else len(self.support)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def global_indices(self) -> np.ndarray:
        """Canonical indices embedded into the full n-qubit index space."""
        if self.support is None:
            return self.indices.copy()
        digits = index_digits(self.indices, len(self.support))
        shifts = 2 * np.asarray(self.support, dtype=np.int64)
        return (digits << shifts).sum(axis=-1).astype(np.int64)

    def embedded(self) -> "CoefficientVector":
        if self.support is None:
            return self
        return CoefficientVector(self.n, self.global_indices(), self.values)

    def to_sum(self) -> WeightedPauliSum:
        g = self.global_indices()
        return WeightedPauliSum(
            self.n, tuple((float(v), PauliString.from_index(self.n, int(i))) for i, v in zip(g, self.values))
        )

    @classmethod
    def from_sum(cls, w: WeightedPauliSum) -> "CoefficientVector":
        keep = w.coefficients != 0
        return cls(w.n, w.indices[keep], w.coefficients[keep])

    @classmethod
    def from_pauli(cls, p: PauliString | str, coefficient: float = 1.0) -> "CoefficientVector":
        if isinstance(p, str):
            p = PauliString.from_label(p)
        return cls(p.n, [p.index], [coefficient])


def _hermiticity_defect(o: np.ndarray) -> float:
    scale = np.abs(o).max()
    if scale == 0:
        return 0.0
    return float(np.abs(o - o.conj().T).max() / scale)


def _prune(idx: np.ndarray, val: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    keep = np.abs(val) >= PRUNE_RTOL * scale
    keep &= val != 0
    return idx[keep], val[keep]


def pauli_traces(o: np.ndarray, n: int, chunk: int | None = None) -> np.ndarray:
    """All ``Tr[P O]`` as a complex array indexed ``[x_mask, z_mask]``."""
    dim = 1 << n
    k = np.arange(dim, dtype=np.int64)
    # signs[z, k] = (-1)^{popcount(z & k)}
    signs = 1.0 - 2.0 * (popcount(k[:, None] & k[None, :]) & 1)
    ipow = np.array([1, 1j, -1, -1j])[popcount(k[:, None] & k[None, :]) % 4]
    out = np.empty((dim, dim), dtype=complex)
    if chunk is None:
        chunk = max(1, (1 << 22) // (dim * dim))
    for x0 in range(0, dim, chunk):
        xs = np.arange(x0, min(dim, x0 + chunk), dtype=np.int64)
        diag = o[k[None, :], k[None, :] ^ xs[:, None]]  # (cx, k)
        # pairwise summation along the contiguous last axis
        sums = (diag[:, None, :] * signs[None, :, :]).sum(axis=-1)
        out[xs] = ipow[xs] * sums
    return out


def _decompose_dense(o: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    o = np.asarray(o, dtype=complex)
    dim = 1 << n
    if o.shape != (dim, dim):
        raise ValueError(f"matrix shape {o.shape} does not match {n} qubits")
    defect = _hermiticity_defect(o)
    if defect > HERMITIAN_RTOL:
        raise DecompositionError(f"matrix is not Hermitian: max relative asymmetry {defect:.3e}")
    traces = pauli_traces(o, n) / dim
    scale = max(1.0, float(np.abs(o).max()))
    worst = float(np.abs(traces.imag).max())
    if worst > IMAG_TOL * scale:
        raise DecompositionError(f"imaginary Pauli coefficient {worst:.3e}")
    xs, zs = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    idx = masks_to_index(xs.ravel(), zs.ravel(), n)
    val = traces.real.ravel()
    order = np.argsort(idx)
    idx, val = idx[order], val[order]
    return _prune(idx, val, float(np.abs(val).sum()))


def decompose(o: np.ndarray, n: int) -> CoefficientVector:
    """Pauli coefficients of a dense Hermitian matrix on ``n`` qubits."""
    if not 1 <= n <= MAX_SWEEP_QUBITS:
        raise CapacityError(f"full Pauli sweep supports n <= {MAX_SWEEP_QUBITS}, got {n}")
    idx, val = _decompose_dense(o, n)
    return CoefficientVector(n, idx, val)


def decompose_local(o_sub: np.ndarray, support: Sequence[int], n: int) -> CoefficientVector:
    """Coefficients of ``o_sub`` acting on ``support`` (identity elsewhere).

    Local qubit ``m`` of ``o_sub`` is global qubit ``support[m]``.  Cost depends
    only on ``len(support)``.
    """
    support = tuple(int(q) for q in support)
    if len(set(support)) != len(support):
        raise DecompositionError(f"duplicate qubits in support {support}")
    if any(not 0 <= q < n for q in support):
        raise DecompositionError(f"support {support} outside {n} qubits")
    k = len(support)
    if not 1 <= k <= MAX_SWEEP_QUBITS:
        raise CapacityError(f"local decomposition supports 1 <= k <= {MAX_SWEEP_QUBITS}, got {k}")
    idx, val = _decompose_dense(o_sub, k)
    return CoefficientVector(n, idx, val, support=support)


def combine_linear(parts: Iterable[tuple[float, CoefficientVector]]) -> CoefficientVector:
    """Merge ``sum_i w_i h^i`` over shared canonical indices."""
    parts = list(parts)
    if not parts:
        raise ValueError("no observables to combine")
    n = parts[0][1].n
    idx_all, val_all = [], []
    scale = 0.0
    for w, cv in parts:
        if cv.n != n:
            raise ValueError(f"dimension mismatch: {cv.n} vs {n} qubits")
        if not np.isfinite(w):
            raise ValueError(f"non-finite weight {w}")
        idx_all.append(cv.global_indices())
        val_all.append(float(w) * cv.values)
        scale += abs(w) * cv.l1
    idx = np.concatenate(idx_all)
    val = np.concatenate(val_all)
    uniq, inv = np.unique(idx, return_inverse=True)
    merged = np.zeros(uniq.size)
    # in-order accumulation so the result does not depend on hashing
    np.add.at(merged, inv, val)
    uniq, merged = _prune(uniq, merged, scale)
    return CoefficientVector(n, uniq, merged)


def to_dense(cv: CoefficientVector) -> np.ndarray:
    if cv.n > MAX_DENSE_QUBITS:
        raise CapacityError(f"dense form limited to n <= {MAX_DENSE_QUBITS}")
    return sum_to_dense(cv.to_sum())


# observable text format: "<coefficient> <pauli-string>" per line, '#' comments


class ObservableParseError(ValueError):
    pass


def parse_observable(text: str, source: str = "<string>") -> WeightedPauliSum:
    terms = []
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ObservableParseError(f"{source}:{lineno}: expected '<coefficient> <pauli-string>', got {raw!r}")
        try:
            c = float(parts[0])
            p = PauliString.from_label(parts[1])
        except ValueError as exc:
            raise ObservableParseError(f"{source}:{lineno}: {exc}") from None
        if n is None:
            n = p.n
        elif p.n != n:
            raise ObservableParseError(f"{source}:{lineno}: string {parts[1]} has {p.n} qubits, expected {n}")
        terms.append((c, p))
    if n is None:
        raise ObservableParseError(f"{source}: no terms")
    try:
        return WeightedPauliSum.from_terms(n, terms)
    except ValueError as exc:
        raise ObservableParseError(f"{source}: {exc}") from None


def format_observable(w: WeightedPauliSum | CoefficientVector, header: str | None = None) -> str:
    if isinstance(w, CoefficientVector):
        w = w.to_sum()
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    lines += [f"{c!r} {p.label}" for c, p in w.terms]
    return "\n".join(lines) + "\n"


def read_observable(path: str | Path) -> WeightedPauliSum:
    path = Path(path)
    return parse_observable(path.read_text(), source=str(path))


def write_observable(path: str | Path, w: WeightedPauliSum | CoefficientVector, header: str | None = None) -> None:
    Path(path).write_text(format_observable(w, header))
