"""Surface-code energy sweep at n = 9: l1 operator shadow vs classical shadow.

    python scripts/run_surface_code.py [--reps 100] [--seed 0] [--unit-weights]

The state is 0.9 * ground state + 0.1 * Haar-random state; generator weights
are standard normal (seeded) unless ``--unit-weights`` is given.
"""
import argparse

from opshadow.experiments import ExperimentConfig, run_surface_code_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budgets", default="1000,3000,10000,30000,100000")
    ap.add_argument("--unit-weights", action="store_true")
    ap.add_argument("--resample-haar", action="store_true")
    ap.add_argument("--out", default="results/surface_code.json")
    a = ap.parse_args()
    cfg = ExperimentConfig.for_experiment(
        "surface-code",
        repetitions=a.reps,
        seed=a.seed,
        budgets=tuple(int(b) for b in a.budgets.split(",")),
        unit_weights=a.unit_weights,
        resample_haar=a.resample_haar,
        output_path=a.out,
    )
    result = run_surface_code_experiment(cfg)
    paths = result.write(a.out)
    print(result.to_csv(), end="")
    print("wrote", *paths)


if __name__ == "__main__":
    main()
