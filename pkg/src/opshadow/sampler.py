"""Binary tree of cumulative weights for l1 / l2 sampling of Pauli indices.

The tree is stored as a complete binary tree in a flat array (children of node
``v`` at ``2v + 1`` and ``2v + 2``).  Leaves hold ``|h_i|`` (l1) or ``h_i**2``
(l2) and are padded to a power of two with zero-weight leaves that the descent
never enters.  Each leaf also keeps the signed coefficient and its canonical
Pauli index.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .decompose import CoefficientVector

L1 = "l1"
L2 = "l2"
_ONE_MINUS = np.nextafter(1.0, 0.0)


_LANES = 16


@numba.njit(cache=True, nogil=True)
def _descend(w, first_leaf, depth, targets, out):
    # _LANES independent descents advance level by level so their loads overlap
    node = np.zeros(_LANES, np.int64)
    tg = np.zeros(_LANES)
    for s in range(0, targets.size, _LANES):
        m = min(_LANES, targets.size - s)
        for k in range(m):
            node[k] = 0
            tg[k] = targets[s + k]
        for _ in range(depth):
            for k in range(m):
                left = 2 * node[k] + 1
                wl = w[left]
                # a zero right sibling is a padding leaf
                right = (tg[k] >= wl) & (w[left + 1] > 0.0)
                tg[k] -= wl * right
                node[k] = left + right
        for k in range(m):
            out[s + k] = node[k] - first_leaf


class SamplingTree:
    def __init__(self, values, payload, mode: str = L1, n: int | None = None):
        if mode not in (L1, L2):
            raise ValueError(f"unknown sampling mode {mode!r}")
        values = np.asarray(values, dtype=float).ravel()
        payload = np.asarray(payload, dtype=np.int64).ravel()
        if values.size == 0:
            raise ValueError("cannot build a sampling tree from an empty coefficient vector")
        if values.shape != payload.shape:
            raise ValueError("values and payload differ in length")
        if np.any(values == 0) or not np.all(np.isfinite(values)):
            raise ValueError("leaf coefficients must be finite and nonzero")
        self.mode = mode
        self.n = n
        self.leaf_count = values.size
        self.depth = math.ceil(math.log2(self.leaf_count)) if self.leaf_count > 1 else 0
        self.capacity = 1 << self.depth
        self.leaf_values = values.copy()
        self.leaf_signs = np.sign(values).astype(np.int8)
        self.leaf_payload = payload.copy()
        self.node_weights = np.zeros(2 * self.capacity - 1)
        self._first_leaf = self.capacity - 1
        self.node_weights[self._first_leaf : self._first_leaf + self.leaf_count] = self._weight(values)
        # bottom-up level sums: O(L) additions
        for level in range(self.depth - 1, -1, -1):
            lo, hi = (1 << level) - 1, (1 << (level + 1)) - 1
            v = np.arange(lo, hi)
            self.node_weights[lo:hi] = self.node_weights[2 * v + 1] + self.node_weights[2 * v + 2]
        if not self.root_total > 0:
            raise ValueError("sampling tree has zero total weight")

    def _weight(self, v):
        return np.abs(v) if self.mode == L1 else np.square(v)

    @classmethod
    def build(cls, cv: CoefficientVector, mode: str = L1) -> "SamplingTree":
        return cls(cv.values, cv.global_indices(), mode=mode, n=cv.n)

    @property
    def root_total(self) -> float:
        return float(self.node_weights[0])

    @property
    def norm(self) -> float:
        """``||h||_1`` in l1 mode, ``||h||_2`` in l2 mode."""
        return self.root_total if self.mode == L1 else math.sqrt(self.root_total)

    @property
    def leaf_weights(self) -> np.ndarray:
        return self.node_weights[self._first_leaf : self._first_leaf + self.leaf_count]

    def probability(self, leaf: int) -> float:
        if not 0 <= leaf < self.leaf_count:
            raise IndexError(f"leaf {leaf} out of range [0, {self.leaf_count})")
        return float(self.node_weights[self._first_leaf + leaf] / self.root_total)

    def probabilities(self) -> np.ndarray:
        return self.leaf_weights / self.root_total

    def sample(self, u: float, return_visits: bool = False):
        """Leaf whose half-open cumulative interval contains ``u * root_total``."""
        u = min(max(float(u), 0.0), _ONE_MINUS)
        w = self.node_weights
        target = u * w[0]
        node = 0
        visits = 1
        while node < self._first_leaf:
            left = 2 * node + 1
            if target >= w[left] and w[left + 1] > 0:
                target -= w[left]
                node = left + 1
            else:
                node = left
            visits += 1
        leaf = node - self._first_leaf
        return (leaf, visits) if return_visits else leaf

    def sample_many(self, u) -> np.ndarray:
        """Vectorised :meth:`sample` over an array of uniforms."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, _ONE_MINUS)
        targets = np.ascontiguousarray(u.ravel() * self.node_weights[0])
        out = np.empty(targets.size, dtype=np.int64)
        _descend(self.node_weights, self._first_leaf, self.depth, targets, out)
        return out.reshape(u.shape)

    def update(self, leaf: int, new_value: float) -> "SamplingTree":
        """Replace a leaf coefficient in place and repair its ancestors."""
        if not 0 <= leaf < self.leaf_count:
            raise IndexError(f"leaf {leaf} out of range [0, {self.leaf_count})")
        new_value = float(new_value)
        if new_value == 0 or not math.isfinite(new_value):
            raise ValueError("update value must be finite and nonzero; rebuild to drop a leaf")
        self.leaf_values[leaf] = new_value
        self.leaf_signs[leaf] = 1 if new_value > 0 else -1
        node = self._first_leaf + leaf
        self.node_weights[node] = self._weight(new_value)
        while node > 0:
            node = (node - 1) // 2
            self.node_weights[node] = self.node_weights[2 * node + 1] + self.node_weights[2 * node + 2]
        return self

    def dump(self) -> str:
        """Level-order node weights, one level per line."""
        lines = []
        for level in range(self.depth + 1):
            lo, hi = (1 << level) - 1, (1 << (level + 1)) - 1
            lines.append(" ".join(repr(float(x)) for x in self.node_weights[lo:hi]))
        return "\n".join(lines)

    def __len__(self) -> int:
        return self.leaf_count

    def __repr__(self) -> str:
        return f"SamplingTree(mode={self.mode!r}, leaves={self.leaf_count}, total={self.root_total!r})"


def build(cv: CoefficientVector, mode: str = L1) -> SamplingTree:
    return SamplingTree.build(cv, mode)
