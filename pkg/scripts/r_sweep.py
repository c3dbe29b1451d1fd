"""True target adaECE as a function of the correction ratio R.

Prints one row per R; the minimum should sit near the true ratio.
"""
import argparse

from utdc import engine
from utdc.engine import UtdcInputs
from utdc.synth import synth_generate


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--drop", type=float, default=0.7)
    p.add_argument("--scale", type=float, default=2.5)
    p.add_argument("--r-values", type=float, nargs="+",
                   default=[0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2])
    args = p.parse_args()

    d = synth_generate(args.seed, args.n, args.n, 10, args.scale, args.drop)
    points = engine.r_sweep(UtdcInputs(d.source, d.target, 1.0), args.r_values,
                            eval_labels=d.target_labels)
    print(f"true R = {d.true_ratio:.4f}")
    print(f"{'R':>5}{'T':>7}{'objective':>11}{'adaECE %':>10}")
    for pt in points:
        print(f"{pt.ratio:>5.2f}{pt.temperature:>7.2f}{pt.objective:>11.4f}"
              f"{100 * pt.true_ada_ece:>10.2f}")


if __name__ == "__main__":
    main()
