import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opshadow.decompose import CoefficientVector, decompose
from opshadow.pauli import PauliString
from opshadow.shadow import (
    ShadowTable,
    Snapshot,
    SnapshotSet,
    brute_force_snapshot_mean,
    collect_snapshots,
    dense_snapshot,
    format_snapshots,
    parse_snapshots,
    read_snapshots,
    shadow_estimate,
    shadow_groups_for,
    snapshot_pauli_expectation,
    snapshot_values,
    write_snapshots,
)
from opshadow.states import PureState, basis_state, haar_random_state, maximally_mixed, mixture

import oracles

seeds = st.integers(0, 2**32 - 1)
snapshots = st.integers(1, 3).flatmap(
    lambda n: st.tuples(st.lists(st.integers(1, 3), min_size=n, max_size=n), st.lists(st.integers(0, 1), min_size=n, max_size=n))
)


@given(snapshots)
def test_dense_snapshot_matches_oracle(sb):
    bases, outs = sb
    snap = Snapshot(tuple(bases), tuple(outs))
    label = "".join("IXYZ"[b] for b in reversed(bases))
    bits = "".join(str(o) for o in reversed(outs))
    np.testing.assert_allclose(dense_snapshot(snap), oracles.snapshot_matrix(label, bits), atol=1e-14)


@given(snapshots, st.data())
def test_pauli_value_is_trace_against_snapshot(sb, data):
    bases, outs = sb
    n = len(bases)
    snap = Snapshot(tuple(bases), tuple(outs))
    p = PauliString.from_index(n, data.draw(st.integers(0, 4**n - 1)))
    ref = np.trace(oracles.pauli_matrix(p.label) @ dense_snapshot(snap)).real
    assert snapshot_pauli_expectation(p, snap) == pytest.approx(ref, abs=1e-12)
    cv = CoefficientVector.from_pauli(p, 0.7)
    assert snapshot_values(cv, SnapshotSet.from_snapshots([snap]))[0] == pytest.approx(0.7 * ref, abs=1e-12)


@given(st.integers(1, 2), seeds)
def test_channel_inversion_exhaustive(n, seed):
    rng = np.random.default_rng(seed)
    state = mixture([(0.6, haar_random_state(n, rng)), (0.4, haar_random_state(n, rng))])
    rho = state.density_matrix()
    np.testing.assert_allclose(brute_force_snapshot_mean(state), rho, atol=1e-10)
    np.testing.assert_allclose(oracles.shadow_channel_average(rho), rho, atol=1e-10)


def test_table_probabilities_are_born_rule():
    rng = np.random.default_rng(1)
    state = mixture([(0.7, haar_random_state(2, rng)), (0.3, maximally_mixed(2))])
    rho = state.density_matrix()
    table = ShadowTable(state)
    for s in range(9):
        # setting digit j (0=X, 1=Y, 2=Z) is qubit j's basis
        d = [(s // 3**j) % 3 for j in range(2)]
        label = "".join("XYZ"[d[j]] for j in reversed(range(2)))
        u = np.kron(oracles.BASIS_U[label[0]], oracles.BASIS_U[label[1]])
        np.testing.assert_allclose(table.probabilities[s], np.diag(u @ rho @ u.conj().T).real, atol=1e-12)


def test_table_and_rotation_paths_agree_in_distribution():
    rng = np.random.default_rng(2)
    state = haar_random_state(2, rng)
    a = collect_snapshots(state, 60_000, np.random.default_rng(3))
    b = ShadowTable(state).sample(60_000, np.random.default_rng(4))
    for snaps in (a, b):
        key = snaps.bases.astype(int) @ [1, 4] * 4 + snaps.outcomes.astype(int) @ [1, 2]
        freq = np.bincount(key, minlength=64) / len(snaps)
        table = ShadowTable(state).probabilities
        for s in range(9):
            d = [s % 3 + 1, s // 3 + 1]
            for j in range(4):
                k = (d[0] + 4 * d[1]) * 4 + j
                p = table[s, j] / 9
                assert abs(freq[k] - p) < 5 * math.sqrt(p * (1 - p) / len(snaps)) + 1e-4


def test_basis_state_snapshots_are_deterministic_in_z():
    snaps = collect_snapshots(basis_state(3, 0b101), 500, np.random.default_rng(0))
    z = snaps.bases == 3
    expected = np.array([1, 0, 1], dtype=np.uint8)
    assert np.all(snaps.outcomes[z] == np.broadcast_to(expected, snaps.outcomes.shape)[z])


def test_shadow_estimate_unbiased_and_grouped():
    rng = np.random.default_rng(5)
    state = haar_random_state(3, rng)
    o = oracles.random_hermitian(3, rng)
    cv = decompose(o, 3)
    truth = float(np.trace(o @ state.density_matrix()).real)
    snaps = ShadowTable(state).sample(200_000, np.random.default_rng(6))
    r = shadow_estimate(cv, snaps)
    assert r.value == pytest.approx(truth, abs=5 * math.sqrt(r.empirical_variance / len(snaps)))
    assert r.shots_used == r.samples_used == 200_000 and r.method == "classical-shadow"
    g = shadow_estimate(cv, snaps, median_groups=shadow_groups_for(1, 0.01))
    assert len(g.per_group_means) == 2 * math.ceil(math.log(200)) + 1


def test_snapshot_text_roundtrip(tmp_path):
    snaps = collect_snapshots(haar_random_state(3, np.random.default_rng(1)), 20, np.random.default_rng(2))
    path = tmp_path / "s.txt"
    write_snapshots(path, snaps)
    assert read_snapshots(path) == snaps
    one = parse_snapshots("XZY 010\n")
    assert one[0] == Snapshot((2, 3, 1), (0, 1, 0))
    assert format_snapshots(one) == "XZY 010\n"
    with pytest.raises(ValueError, match="line 2"):
        parse_snapshots("XZ 01\nXQ 01\n")


def test_validation():
    with pytest.raises(ValueError):
        SnapshotSet([[0, 1]], [[0, 0]])
    with pytest.raises(ValueError):
        collect_snapshots(basis_state(1, 0), 0, np.random.default_rng())
    with pytest.raises(ValueError):
        snapshot_pauli_expectation(PauliString.from_label("XX"), Snapshot((1,), (0,)))
    assert isinstance(basis_state(1, 0), PureState)
