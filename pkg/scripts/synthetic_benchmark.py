"""Compare calibration methods on synthetic shifted pairs over several seeds.

    python3 scripts/synthetic_benchmark.py --seeds 0 1 2 --drop 0.7
"""
import argparse

import numpy as np

from utdc import accuracy, baselines


def run_seed(seed, args):
    from utdc.synth import synth_generate

    d = synth_generate(seed, args.n, args.n, args.k, args.scale, args.drop)
    y = d.target_labels
    weights = baselines.fit_domain_weights(d.source_features, d.target_features)
    atc = accuracy.atc_estimate(d.source, d.target)
    rows = [
        baselines.run_uncalibrated(d.source, d.target, y, args.M),
        baselines.run_source_baseline("TS", d.source, d.target, y, args.M),
        baselines.run_iw_ts(d.source, weights, d.target, y, args.M),
        baselines.run_utdc(d.source, d.target, atc, y, args.M)[0],
        baselines.run_utdc(d.source, d.target, d.true_ratio, y, args.M, name="UTDC*")[0],
        baselines.run_oracle_target_ts(d.labelled_target, args.M),
    ]
    return {r.method_name: (100 * r.target_metrics["ada_ece"], r.temperature) for r in rows}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--scale", type=float, default=2.5)
    p.add_argument("--drop", type=float, default=0.7)
    p.add_argument("-M", type=int, default=15)
    args = p.parse_args()

    results = [run_seed(s, args) for s in args.seeds]
    print(f"{'method':<14}{'adaECE %':>10}{'sd':>8}{'mean T':>9}")
    for name in results[0]:
        ada = np.array([r[name][0] for r in results])
        temps = np.array([r[name][1] for r in results], dtype=float)
        print(f"{name:<14}{ada.mean():>10.2f}{ada.std():>8.2f}{temps.mean():>9.2f}")


if __name__ == "__main__":
    main()
