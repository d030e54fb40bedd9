"""Independent reference implementations used to check the package.

Nothing here imports opshadow: Pauli matrices come from Kronecker products,
coefficients from explicit traces, estimator moments from exact binomial
enumeration, and classical-shadow averages from summing over every basis
setting and outcome.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SINGLE = {"I": I2, "X": X, "Y": Y, "Z": Z}


def pauli_matrix(label: str) -> np.ndarray:
    """Leftmost letter acts on the highest qubit (standard kron order)."""
    m = np.ones((1, 1), dtype=complex)
    for ch in label:
        m = np.kron(m, SINGLE[ch])
    return m


def all_labels(n: int) -> list[str]:
    return ["".join(t) for t in itertools.product("IXYZ", repeat=n)]


def decompose(o: np.ndarray) -> dict[str, float]:
    """label -> Tr[P O] / 2^n for every Pauli string (zeros included)."""
    n = int(round(math.log2(o.shape[0])))
    return {s: float(np.trace(pauli_matrix(s) @ o).real) / 2**n for s in all_labels(n)}


def reconstruct(coeffs: dict[str, float]) -> np.ndarray:
    return sum(c * pauli_matrix(s) for s, c in coeffs.items())


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    return (a + a.conj().T) / 2


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    d = 2**n
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def expectation(label: str, rho: np.ndarray) -> float:
    return float(np.trace(pauli_matrix(label) @ rho).real)


def binomial_pmf(m: int, p: float) -> np.ndarray:
    return np.array([math.comb(m, k) * p**k * (1 - p) ** (m - k) for k in range(m + 1)])


def shot_moments(
    probs: np.ndarray, factors: np.ndarray, expvals: np.ndarray, m: int | None
) -> tuple[float, float]:
    """Exact mean and variance of ``factor_i * (2 Z - 1)`` with ``i ~ probs``.

    ``Z`` is the fraction of +1 outcomes in ``m`` shots of a Pauli with
    expectation ``expvals[i]``; ``m=None`` replaces ``2Z - 1`` with the exact
    expectation.
    """
    mean = second = 0.0
    for p, f, e in zip(probs, factors, expvals):
        if m is None:
            mean += p * f * e
            second += p * (f * e) ** 2
            continue
        pmf = binomial_pmf(m, (1 + e) / 2)
        vals = f * (2 * np.arange(m + 1) / m - 1)
        mean += p * float(pmf @ vals)
        second += p * float(pmf @ vals**2)
    return mean, second - mean**2


def l1_sampling(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and per-term factors of the l1 estimator."""
    l1 = np.abs(h).sum()
    return np.abs(h) / l1, np.sign(h) * l1


def l2_sampling(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = float(np.dot(h, h))
    return h**2 / sq, sq / h


# classical shadows

H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S_DAG = np.diag([1, -1j])
BASIS_U = {"X": H_GATE, "Y": H_GATE @ S_DAG, "Z": I2}


def snapshot_matrix(bases: str, bits: str) -> np.ndarray:
    """``kron(3 U^dag |b><b| U - I)``; ``bases[0]``/``bits[0]`` is the highest qubit."""
    m = np.ones((1, 1), dtype=complex)
    for b, bit in zip(bases, bits):
        u = BASIS_U[b]
        ket = np.zeros((2, 1), dtype=complex)
        ket[int(bit)] = 1
        m = np.kron(m, 3 * u.conj().T @ ket @ ket.conj().T @ u - I2)
    return m


def shadow_channel_average(rho: np.ndarray) -> np.ndarray:
    """Exact expectation of the snapshot over uniform bases and Born outcomes."""
    n = int(round(math.log2(rho.shape[0])))
    out = np.zeros_like(rho)
    for bases in itertools.product("XYZ", repeat=n):
        u = np.ones((1, 1), dtype=complex)
        for b in bases:
            u = np.kron(u, BASIS_U[b])
        probs = np.diag(u @ rho @ u.conj().T).real
        for j, bits in enumerate(itertools.product("01", repeat=n)):
            out += probs[j] * snapshot_matrix("".join(bases), "".join(bits))
    return out / 3**n


# states


def ghz_density(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return np.outer(v, v.conj())


def surface_code_hamiltonian_dense(weights=None) -> np.ndarray:
    """Distance-3 rotated surface code, qubits labelled 1..9 (label q -> bit q-1)."""
    xs = [(2, 3), (1, 2, 4, 5), (5, 6, 8, 9), (7, 8)]
    zs = [(1, 4), (2, 3, 5, 6), (4, 5, 7, 8), (6, 9)]
    weights = np.ones(8) if weights is None else np.asarray(weights, dtype=float)
    h = np.zeros((512, 512), dtype=complex)
    for w, (letter, qubits) in zip(weights, [("X", q) for q in xs] + [("Z", q) for q in zs]):
        label = "".join(letter if (9 - pos) in qubits else "I" for pos in range(9))
        h -= w * pauli_matrix(label)
    return h
