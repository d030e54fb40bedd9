import json

import numpy as np
import pytest

from opshadow import cli
from opshadow.cli import UsageError, main, parse_state_spec
from opshadow.decompose import read_observable
from opshadow.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    dense_expectation,
    run_compare,
    run_fidelity_experiment,
    run_surface_code_experiment,
    samples_in_budget,
    surface_code_setup,
    surface_code_state,
    theorem_budget,
)
from opshadow.pauli import WeightedPauliSum
from opshadow.rng import stream
from opshadow.states import depolarize, ghz_state, haar_random_state

import oracles


def small(experiment, **kw):
    kw = {"repetitions": 3, "budgets": (400, 4000), **kw}
    return ExperimentConfig.for_experiment(experiment, **kw)


def test_config_invariants():
    with pytest.raises(ValueError):
        ExperimentConfig(budgets=(100, 100))
    with pytest.raises(ValueError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ValueError):
        ExperimentConfig(methods=("l3",))
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="other")
    c = ExperimentConfig.for_experiment("surface-code")
    assert (c.n, c.epsilon, c.methods, c.repetitions) == (9, 0.04, ("l1", "shadow"), 100)


def test_budget_below_one_trial():
    with pytest.raises(ValueError):
        samples_in_budget(3, 4)
    with pytest.raises(ValueError):
        run_fidelity_experiment(ExperimentConfig.for_experiment("fidelity", n=3, budgets=(2,), repetitions=1))


def test_fidelity_reference_is_exact():
    cfg = small("fidelity", n=4)
    r = run_fidelity_experiment(cfg)
    target = haar_random_state(4, stream(cfg.seed, "fidelity", "target"))
    sigma = depolarize(target, 0.1).density_matrix()
    exact = float(np.trace(target.density_matrix() @ sigma).real)
    assert r.reference == pytest.approx(exact, abs=1e-10)
    assert r.reference == pytest.approx(0.9 + 0.1 / 16, abs=1e-10)
    assert [(row.method, row.budget) for row in r.rows] == [("l1", 400), ("l1", 4000), ("l2", 400), ("l2", 4000)]
    for row in r.rows:
        assert 0 <= row.failure_prob <= 1 and row.reps == 3
    with pytest.raises(ValueError):
        run_fidelity_experiment(small("fidelity", n=3, methods=("shadow",)))


def test_theorem_budget_is_added():
    cfg = small("fidelity", n=3, theorem_failure=0.5, epsilon=0.3)
    r = run_fidelity_experiment(cfg)
    tb = theorem_budget(r.info["l1_norm"], 0.3, 0.5)
    assert tb in r.info["budgets"]
    assert r.info["budgets"] == sorted(r.info["budgets"])


def test_surface_code_reference_matches_dense_oracle():
    cfg = small("surface-code")
    r = run_surface_code_experiment(cfg)
    w = np.asarray(r.info["weights"])
    _, _, _, g0, _ = surface_code_setup(cfg)
    rho = surface_code_state(cfg, g0).density_matrix()
    exact = float(np.trace(oracles.surface_code_hamiltonian_dense(w) @ rho).real)
    assert r.reference == pytest.approx(exact, abs=1e-10)
    # the Haar part is computed, not assumed to vanish
    assert r.reference != pytest.approx(0.9 * r.info["ground_energy"], abs=1e-6)
    with pytest.raises(ValueError):
        run_surface_code_experiment(small("surface-code", methods=("l2",)))
    with pytest.raises(ValueError):
        run_surface_code_experiment(small("surface-code", n=8))


def test_surface_code_resampled_haar():
    r = run_surface_code_experiment(small("surface-code", resample_haar=True, budgets=(400,)))
    assert len(r.values["l1"][400]) == 3


def test_compare_sweep_shot_accounting():
    obs = WeightedPauliSum.from_terms(2, [(0.5, "ZZ"), (-0.3, "XI")])
    state = ghz_state(2)
    cfg = ExperimentConfig.for_experiment("compare", n=2, budgets=(401, 4003), repetitions=2)
    r = run_compare(cfg, obs, state)
    assert r.reference == pytest.approx(0.5)
    assert {row.method for row in r.rows} == {"l1", "l2", "shadow"}
    # operator shadows spend T*M <= budget shots
    assert samples_in_budget(401, 4) * 4 == 400


def test_outputs_are_byte_identical(tmp_path):
    cfg = small("fidelity", n=3)
    a = run_fidelity_experiment(cfg).write(tmp_path / "a.json")
    b = run_fidelity_experiment(cfg).write(tmp_path / "b.json")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    assert a[1].read_text().splitlines()[0] == ",".join(CSV_HEADER)
    doc = json.loads(a[0].read_text())
    assert doc["config"]["experiment"] == "fidelity" and "rows" in doc


def test_adding_a_method_does_not_change_others():
    one = run_fidelity_experiment(small("fidelity", n=3, methods=("l1",)))
    two = run_fidelity_experiment(small("fidelity", n=3, methods=("l1", "l2")))
    assert one.values["l1"] == two.values["l1"]


# CLI


def test_state_specs():
    assert parse_state_spec("basis:3", 2).amplitudes[3] == 1
    assert parse_state_spec("basis:10", 2).amplitudes[2] == 1
    m = parse_state_spec("0.9*ghz+0.1*mixed", 3)
    assert m.mixed_weight == pytest.approx(0.1)
    a, b = parse_state_spec("haar:5", 2), parse_state_spec("haar:5", 2)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert parse_state_spec("surface-ground", 9).n == 9
    with pytest.raises(UsageError, match="valid"):
        parse_state_spec("bogus", 2)
    with pytest.raises(UsageError):
        parse_state_spec("x*ghz+0.5*mixed", 2)
    with pytest.raises(UsageError):
        parse_state_spec("surface-ground", 3)


def test_cli_estimate_l1_and_shadow(tmp_path, capsys):
    obs = tmp_path / "z.obs"
    obs.write_text("1.0 Z\n")
    out = tmp_path / "r.json"
    assert main(["estimate", "--method", "l1", "--obs", str(obs), "--state", "basis:0", "--epsilon", "0.05", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert abs(rep["value"] - 1) <= 0.05 and rep["method"] == "l1"
    assert rep["shots"] == rep["samples"] * 4
    out2 = tmp_path / "s.json"
    main(["estimate", "--method", "shadow", "--obs", str(obs), "--state", "basis:0", "--epsilon", "0.05", "--out", str(out2)])
    rep2 = json.loads(out2.read_text())
    assert abs(rep2["value"] - 1) <= 0.05 and rep2["method"] == "classical-shadow"
    assert "l1:" in capsys.readouterr().out


def test_cli_usage_errors(tmp_path, capsys):
    obs = tmp_path / "z.obs"
    obs.write_text("1.0 Z\n")
    with pytest.raises(SystemExit) as e:
        main(["estimate", "--obs", str(obs), "--state", "nope"])
    assert e.value.code == 2
    assert "valid" in capsys.readouterr().err
    bad = tmp_path / "bad.obs"
    bad.write_text("1.0 ZZ\n0.5 ZQ\n")
    with pytest.raises(SystemExit):
        main(["estimate", "--obs", str(bad)])
    assert ":2:" in capsys.readouterr().err


def test_cli_decompose_text_and_npy(tmp_path):
    rng = np.random.default_rng(3)
    o = oracles.random_hermitian(2, rng)
    txt = tmp_path / "m.txt"
    txt.write_text("\n".join(" ".join(repr(complex(v)) for v in row) for row in o) + "\n")
    np.save(tmp_path / "m.npy", o)
    for src in (txt, tmp_path / "m.npy"):
        out = tmp_path / (src.name + ".obs")
        assert main(["decompose", "--dense", str(src), "--out", str(out)]) == 0
        w = read_observable(out)
        ref = oracles.decompose(o)
        got = {p.label: c for c, p in w.terms}
        for label, c in ref.items():
            assert got.get(label, 0.0) == pytest.approx(c, abs=1e-12)


def test_cli_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nn = 3\nreps = 2\nbudgets = 400, 800\nseed = 5\nepsilon = 0.2\n")
    out = tmp_path / "fid"
    assert main(["fidelity", "--config", str(cfg), "--reps", "1", "--out", str(out)]) == 0
    doc = json.loads((tmp_path / "fid.json").read_text())
    assert doc["config"]["repetitions"] == 1
    assert doc["config"]["n"] == 3 and doc["config"]["budgets"] == [400, 800] and doc["config"]["seed"] == 5
    lines = (tmp_path / "fid.csv").read_text().splitlines()
    assert lines[0] == "method,budget,abs_error_mean,failure_prob,reps,reference" and len(lines) == 5
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(SystemExit):
        main(["fidelity", "--config", str(bad)])


def test_cli_compare_and_surface_code(tmp_path):
    obs = tmp_path / "o.obs"
    obs.write_text("0.5 ZZ\n-0.25 XX\n")
    assert main(["compare", "--obs", str(obs), "--state", "0.5*ghz+0.5*mixed", "--budgets", "400", "--reps", "2", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c.csv").exists()
    assert main(["surface-code", "--budgets", "400", "--reps", "1", "--out", str(tmp_path / "s"), "--methods", "l1"]) == 0
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["config"]["n"] == 9


def test_module_entry_point_exists():
    assert callable(cli.main)
