"""Command-line front end: ``opshadow <subcommand> ...``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .decompose import (
    CoefficientVector,
    ObservableParseError,
    decompose,
    format_observable,
    read_observable,
    write_observable,
)
from .estimators import EstimatorConfig, l1_operator_shadow, l2_operator_shadow
from .experiments import (
    ExperimentConfig,
    run_compare,
    run_fidelity_experiment,
    run_surface_code_experiment,
    shadow_snapshot_count,
)
from .pauli import WeightedPauliSum, sum_to_dense
from .rng import stream
from .sampler import L1, L2, SamplingTree
from .shadow import ShadowTable, collect_snapshots, shadow_estimate
from .states import (
    State,
    basis_state,
    ground_state,
    ghz_state,
    haar_random_state,
    load_state,
    maximally_mixed,
    mixture,
    surface_code_hamiltonian,
)

STATE_SPECS = (
    "ghz",
    "haar",
    "haar:<seed>",
    "basis:<int or bitstring>",
    "mixed",
    "surface-ground",
    "file:<state.json>",
    "<w>*<spec>+<w>*<spec>",
)


class UsageError(ValueError):
    pass


def _single_state(spec: str, n: int, seed: int) -> State:
    name, _, arg = spec.partition(":")
    if name == "ghz" and not arg:
        return ghz_state(n)
    if name == "haar":
        s = int(arg) if arg else seed
        return haar_random_state(n, stream(s, "state", "haar"))
    if name == "basis" and arg:
        if len(arg) == n and set(arg) <= {"0", "1"} and n > 1:
            j = int(arg, 2)  # qubit n-1 leftmost
        else:
            j = int(arg)
        if not 0 <= j < 2**n:
            raise UsageError(f"basis index {j} out of range for n = {n}")
        return basis_state(n, j)
    if name == "mixed" and not arg:
        return maximally_mixed(n)
    if name == "surface-ground" and not arg:
        if n != 9:
            raise UsageError("surface-ground needs n = 9")
        h, _ = surface_code_hamiltonian()
        return ground_state(h)[0]
    if name == "file" and arg:
        st = load_state(arg)
        if st.n != n:
            raise UsageError(f"state file has n = {st.n}, observable has n = {n}")
        return st
    raise UsageError(f"unknown state spec {spec!r}; valid: {', '.join(STATE_SPECS)}")


def parse_state_spec(spec: str, n: int, seed: int = 0) -> State:
    """Build a state from a spec string such as ``0.9*ghz+0.1*mixed``."""
    spec = spec.strip()
    if "+" not in spec and "*" not in spec:
        return _single_state(spec, n, seed)
    parts = []
    for term in spec.split("+"):
        w, star, body = term.partition("*")
        if not star:
            raise UsageError(f"mixture term {term!r} must look like <weight>*<spec>")
        try:
            parts.append((float(w), _single_state(body.strip(), n, seed)))
        except ValueError as e:
            if isinstance(e, UsageError):
                raise
            raise UsageError(f"bad mixture weight {w!r}") from e
    return mixture(parts)


# config handling


def read_config(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


_CONVERT = {
    "n": int,
    "epsilon": float,
    "budgets": lambda s: tuple(int(float(b)) for b in _csv(s)),
    "repetitions": int,
    "methods": lambda s: tuple(_csv(s)),
    "seed": int,
    "output_path": str,
    "resample_haar": _bool,
    "shots_per_pauli": int,
    "depolarizing": float,
    "haar_weight": float,
    "unit_weights": _bool,
    "shadow_groups": int,
    "theorem_failure": float,
}
_ALIASES = {"reps": "repetitions", "out": "output_path", "shots": "shots_per_pauli"}


def merged_settings(args: argparse.Namespace) -> dict:
    """Config-file values overridden by any flag given on the command line."""
    settings: dict = {}
    if args.config:
        for key, value in read_config(args.config).items():
            key = _ALIASES.get(key, key)
            if key in _CONVERT:
                settings[key] = _CONVERT[key](value)
            elif key not in ("obs", "state", "method", "samples", "delta", "median_groups", "dense"):
                raise UsageError(f"unknown config key {key!r}")
            else:
                settings[key] = value
    for key in _CONVERT:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = _CONVERT[key](flag) if isinstance(flag, str) else flag
    for key in ("obs", "state", "method", "samples", "delta", "median_groups", "dense"):
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def experiment_config(name: str, settings: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig.for_experiment(name, **{k: v for k, v in settings.items() if k in known})


# subcommands


def _emit_sweep(result, out: str | None) -> None:
    if out:
        jp, cp = result.write(out)
        print(f"wrote {jp} and {cp}")
    sys.stdout.write(result.to_csv())


def cmd_decompose(args, settings) -> int:
    src = settings.get("dense")
    if not src:
        raise UsageError("decompose needs --dense <matrix file>")
    m = load_dense(src)
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if m.shape != (dim, dim) or 2**n != dim:
        raise UsageError(f"matrix shape {m.shape} is not 2^n x 2^n")
    cv = decompose(m, n)
    out = settings.get("output_path")
    header = f"decomposition of {Path(src).name}: {len(cv)} terms, l1 = {cv.l1!r}"
    if out:
        write_observable(out, cv, header=header)
        print(f"wrote {len(cv)} terms to {out}")
    else:
        sys.stdout.write(format_observable(cv, header=header))
    return 0


def load_dense(path: str | Path) -> np.ndarray:
    """A ``.npy`` array, or whitespace-separated complex entries (one row per line)."""
    path = Path(path)
    if path.suffix == ".npy":
        return np.asarray(np.load(path), dtype=complex)
    rows = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append([complex(tok.replace("i", "j")) for tok in line.split()])
    return np.array(rows, dtype=complex)


def run_estimate(settings: dict):
    """One estimator run on an observable file and a state spec; returns the report."""
    if "obs" not in settings:
        raise UsageError("estimate needs --obs <observable file>")
    obs = read_observable(settings["obs"])
    seed = int(settings.get("seed", 0))
    state = parse_state_spec(settings.get("state", "basis:0"), obs.n, seed)
    method = settings.get("method", "l1")
    eps = float(settings.get("epsilon", 0.05))
    delta = float(settings.get("delta", 0.01))
    samples = settings.get("samples")
    samples = int(samples) if samples is not None else None
    groups = int(settings.get("median_groups", 1))
    cv = CoefficientVector.from_sum(obs)
    if method in ("l1", "l2"):
        cfg = EstimatorConfig(
            samples=samples,
            shots_per_pauli=int(settings.get("shots_per_pauli", 4)),
            epsilon=eps,
            delta=delta,
            median_groups=groups,
            seed=seed,
        )
        if method == "l1":
            return l1_operator_shadow(SamplingTree.build(cv, L1), state, cfg)
        return l2_operator_shadow(SamplingTree.build(cv, L2), state, cfg)
    if method == "shadow":
        if samples is None:
            support = 0
            for i in cv.global_indices():
                support |= _support_mask(int(i), obs.n)
            norm = float(np.max(np.abs(np.linalg.eigvalsh(sum_to_dense(obs))))) if obs.n <= 10 else cv.l1
            samples = shadow_snapshot_count(bin(support).count("1"), norm, eps, delta)
        rng = stream(seed, "estimate", "shadow")
        snaps = ShadowTable(state).sample(samples, rng) if obs.n <= 9 else collect_snapshots(state, samples, rng)
        return shadow_estimate(cv, snaps, groups, seed=seed, epsilon=eps)
    raise UsageError(f"unknown method {method!r}; choose l1, l2 or shadow")


def _support_mask(index: int, n: int) -> int:
    mask = 0
    for q in range(n):
        if (index >> (2 * q)) & 3:
            mask |= 1 << q
    return mask


def cmd_estimate(args, settings) -> int:
    report = run_estimate(settings)
    out = settings.get("output_path")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(report.to_json() + "\n")
    print(f"{report.method}: {report.value:.6f}  (samples {report.samples_used}, shots {report.shots_used}, seed {report.seed})")
    return 0


def cmd_fidelity(args, settings) -> int:
    _emit_sweep(run_fidelity_experiment(experiment_config("fidelity", settings)), settings.get("output_path"))
    return 0


def cmd_surface_code(args, settings) -> int:
    settings.setdefault("n", 9)
    _emit_sweep(run_surface_code_experiment(experiment_config("surface-code", settings)), settings.get("output_path"))
    return 0


def cmd_compare(args, settings) -> int:
    if "obs" not in settings:
        raise UsageError("compare needs --obs <observable file>")
    obs: WeightedPauliSum = read_observable(settings["obs"])
    settings["n"] = obs.n
    cfg = experiment_config("compare", settings)
    state = parse_state_spec(settings.get("state", "basis:0"), obs.n, cfg.seed)
    _emit_sweep(run_compare(cfg, obs, state), cfg.output_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opshadow", description="Operator-shadow and classical-shadow estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    def shared(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--budgets", help="comma-separated total-shot budgets")
        sp.add_argument("--reps", dest="repetitions", type=int)
        sp.add_argument("--methods", help="comma-separated subset of l1,l2,shadow")
        sp.add_argument("--out", dest="output_path")
        sp.add_argument("--config", help="key = value file; flags win")
        sp.add_argument("--shots", dest="shots_per_pauli", type=int, help="shots per sampled Pauli (M)")
        return sp

    d = shared(sub.add_parser("decompose", help="Pauli-decompose a dense Hermitian matrix"))
    d.add_argument("--dense", help=".npy or text matrix file")
    d.set_defaults(func=cmd_decompose)

    e = shared(sub.add_parser("estimate", help="single estimate of Tr[O rho]"))
    e.add_argument("--obs")
    e.add_argument("--state", help="state spec: " + ", ".join(STATE_SPECS))
    e.add_argument("--method", choices=("l1", "l2", "shadow"))
    e.add_argument("--samples", type=int, help="T (or snapshots); default from epsilon and delta")
    e.add_argument("--delta", type=float)
    e.add_argument("--median-groups", dest="median_groups", type=int)
    e.set_defaults(func=cmd_estimate)

    f = shared(sub.add_parser("fidelity", help="fidelity-estimation sweep"))
    f.add_argument("--n", type=int)
    f.add_argument("--resample-haar", dest="resample_haar", action="store_const", const=True)
    f.add_argument("--theorem-failure", dest="theorem_failure", type=float)
    f.set_defaults(func=cmd_fidelity)

    s = shared(sub.add_parser("surface-code", help="surface-code energy sweep"))
    s.add_argument("--unit-weights", dest="unit_weights", action="store_const", const=True)
    s.add_argument("--resample-haar", dest="resample_haar", action="store_const", const=True)
    s.add_argument("--shadow-groups", dest="shadow_groups", type=int)
    s.add_argument("--theorem-failure", dest="theorem_failure", type=float)
    s.set_defaults(func=cmd_surface_code)

    c = shared(sub.add_parser("compare", help="sweep methods on an observable file and state"))
    c.add_argument("--obs")
    c.add_argument("--state")
    c.add_argument("--shadow-groups", dest="shadow_groups", type=int)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = merged_settings(args)
        return args.func(args, settings)
    except (UsageError, ObservableParseError, FileNotFoundError) as e:
        parser.exit(2, f"opshadow {args.command}: error: {e}\n")
    except ValueError as e:
        parser.exit(1, f"opshadow {args.command}: error: {e}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
