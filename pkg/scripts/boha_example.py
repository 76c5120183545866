"""Polish 4D shifted Bohachevsky elites along a multipoint curve, seed by seed."""
import argparse

from curvepolish import funcs
from curvepolish.elites import EliteGenConfig, generate_elite_solutions
from curvepolish.polish import PolishConfig, polish


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--strategy", default="multipoint")
    args = ap.parse_args()
    f = funcs.get("boha", 4)
    for seed in range(args.seeds):
        run = generate_elite_solutions(f, EliteGenConfig(seed=seed))
        out = polish(run.elites, PolishConfig(strategy=args.strategy, seed=seed), f)
        print(f"seed {seed}: {out.f_before:.4g} -> {out.f_after:.4g} "
              f"({out.evaluations_used} evaluations)")


if __name__ == "__main__":
    main()
