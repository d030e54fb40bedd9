"""Fidelity-estimation sweep at n = 8 (Haar target, 10% depolarizing noise).

    python scripts/run_fidelity.py [--reps 100] [--seed 0] [--out results/fidelity.json]

Writes a JSON report and a CSV of (method, budget, abs_error_mean,
failure_prob, reps, reference) rows; also adds the budget at which the l1
Chebyshev bound gives failure probability 0.1.
"""
import argparse

from opshadow.experiments import ExperimentConfig, run_fidelity_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budgets", default="1000,3000,10000,30000,100000")
    ap.add_argument("--no-theorem-budget", action="store_true")
    ap.add_argument("--out", default="results/fidelity.json")
    a = ap.parse_args()
    cfg = ExperimentConfig.for_experiment(
        "fidelity",
        repetitions=a.reps,
        seed=a.seed,
        budgets=tuple(int(b) for b in a.budgets.split(",")),
        output_path=a.out,
        theorem_failure=None if a.no_theorem_budget else 0.1,
    )
    result = run_fidelity_experiment(cfg)
    paths = result.write(a.out)
    print(result.to_csv(), end="")
    print("wrote", *paths)


if __name__ == "__main__":
    main()
