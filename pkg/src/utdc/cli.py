"""Command-line entry point: ``utdc <subcommand> ...``.

Errors are reported on stderr as a single JSON object
``{"error": <code>, "message": <text>}`` with exit status 1.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import accuracy, baselines, io, maps, metrics
from .engine import UtdcInputs, r_sweep
from .errors import InvalidArgumentError, UtdcError
from .grid import TemperatureGrid

ESTIMATORS = ("atc", "meta", "oracle", "explicit-R")
DEFAULT_R_VALUES = tuple(round(0.5 + 0.1 * i, 1) for i in range(8))


@dataclass
class RunConfig:
    source_logits_path: Optional[str] = None
    source_labels_path: Optional[str] = None
    target_logits_path: Optional[str] = None
    target_labels_path: Optional[str] = None
    source_features_path: Optional[str] = None
    target_features_path: Optional[str] = None
    meta_records_path: Optional[str] = None
    M: int = metrics.DEFAULT_BINS
    grid_min: float = 0.1
    grid_max: float = 10.0
    grid_step: float = 0.01
    methods: list = field(default_factory=lambda: ["uncalibrated", "source-ts", "utdc"])
    estimator: str = "atc"
    ratio: Optional[float] = None
    seed: int = 0
    output_dir: str = "."

    def __post_init__(self):
        if self.M < 1:
            raise InvalidArgumentError(f"M must be >= 1, got {self.M}")
        if not self.methods:
            raise InvalidArgumentError("methods must not be empty")
        unknown = [m for m in self.methods if m not in baselines.METHODS]
        if unknown:
            raise InvalidArgumentError(
                f"unknown methods {unknown}; choose from {sorted(baselines.METHODS)}"
            )
        if self.estimator not in ESTIMATORS:
            raise InvalidArgumentError(f"unknown estimator {self.estimator!r}")

    @property
    def grid(self) -> TemperatureGrid:
        return TemperatureGrid(self.grid_min, self.grid_max, self.grid_step)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        known = {k: v for k, v in vars(args).items() if k in cls.__dataclass_fields__}
        if isinstance(known.get("methods"), str):
            known["methods"] = [m.strip() for m in known["methods"].split(",") if m.strip()]
        return cls(**known)

    def to_dict(self) -> dict:
        return asdict(self)


def _require(value, flag: str):
    if value is None:
        raise InvalidArgumentError(f"{flag} is required here")
    return value


class Run:
    """Inputs loaded once from a RunConfig."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.source = io.load_prediction_set(
            _require(cfg.source_logits_path, "--source-logits-path"),
            _require(cfg.source_labels_path, "--source-labels-path"),
        )
        target = io.load_prediction_set(
            _require(cfg.target_logits_path, "--target-logits-path"), cfg.target_labels_path)
        self.target = target.without_labels()
        self.target_labels = target.labels
        self._features = {}

    def features(self, which: str) -> np.ndarray:
        if which not in self._features:
            path = getattr(self.cfg, f"{which}_features_path")
            self._features[which] = io.load_features(
                _require(path, f"--{which}-features-path"))
        return self._features[which]

    @property
    def labelled_target(self):
        if self.target_labels is None:
            raise InvalidArgumentError("--target-labels-path is required here")
        return self.target.with_labels(self.target_labels)

    def estimate(self, estimator: Optional[str] = None):
        """Return (ratio argument for UTDC, estimator diagnostics)."""
        estimator = estimator or self.cfg.estimator
        if estimator == "explicit-R":
            R = _require(self.cfg.ratio, "--ratio")
            return float(R), {"method": "explicit-R", "ratio": float(R)}
        if estimator == "atc":
            est = accuracy.atc_estimate(self.source, self.target)
        elif estimator == "oracle":
            est = accuracy.oracle_estimate(self.labelled_target)
        else:
            records = io.load_meta_records(
                _require(self.cfg.meta_records_path, "--meta-records-path"))
            src_summary = accuracy.summarize_features(self.features("source"))
            model = accuracy.meta_fit(records, src_summary)
            est = accuracy.meta_estimate(model, src_summary, self.features("target"))
        return est, est.to_dict()

    def run_method(self, name: str):
        cfg, grid = self.cfg, self.cfg.grid
        common = dict(eval_labels=self.target_labels, M=cfg.M, grid=grid)
        if name == "uncalibrated":
            return baselines.run_uncalibrated(self.source, self.target, **common), None
        if name in ("source-ts", "source-vs", "source-ms"):
            kind = name.split("-")[1].upper()
            return baselines.run_source_baseline(kind, self.source, self.target, **common), None
        if name == "target-ts":
            return baselines.run_oracle_target_ts(self.labelled_target, cfg.M, grid), None
        if name == "iw-ts":
            weights = baselines.fit_domain_weights(self.features("source"),
                                                   self.features("target"))
            return baselines.run_iw_ts(self.source, weights, self.target, **common), None
        if name == "utdc-oracle":
            est = accuracy.oracle_estimate(self.labelled_target)
            return baselines.run_utdc(self.source, self.target, est, name="UTDC*", **common)
        ratio, _ = self.estimate()
        return baselines.run_utdc(self.source, self.target, ratio, **common)


def _print_json(data) -> None:
    sys.stdout.write(io.dump_json(data))


def cmd_metrics(args) -> None:
    preds = io.load_prediction_set(args.logits_path, args.labels_path)
    cmap = io.load_map(args.map_path) if args.map_path else maps.CalibrationMap(
        "temperature", temperature=args.temperature)
    calibrated = maps.apply_map(cmap, preds)
    _print_json({"n": preds.n, "k": preds.k, "accuracy": preds.accuracy(),
                 "metrics": metrics.calibration_metrics(calibrated, args.M)})


def cmd_calibrate(args) -> None:
    preds = io.load_prediction_set(args.logits_path, args.labels_path)
    grid = TemperatureGrid(args.grid_min, args.grid_max, args.grid_step)
    if args.method == "ts-adaece":
        cmap, report = maps.fit_temperature_ada_ece(preds, args.M, grid)
    elif args.method == "ts-nll":
        cmap, report = maps.fit_temperature_nll(preds, grid)
    elif args.method == "vs":
        cmap, report = maps.fit_vector_scaling(preds)
    else:
        cmap, report = maps.fit_matrix_scaling(preds)
    if args.output:
        io.save_map(args.output, cmap)
    if args.reliability_path:
        io.emit_reliability_data(preds, cmap, args.M, args.reliability_path)
    _print_json({"map": cmap.to_dict(), "fit": {
        "objective_name": report.objective_name,
        "objective_value": report.objective_value,
        "iterations_or_grid_points": report.iterations_or_grid_points,
        "converged": report.converged,
    }})


def cmd_estimate_accuracy(args) -> None:
    run = Run(RunConfig.from_args(args))
    _, diag = run.estimate()
    _print_json(diag)


def _report(run: Run, methods) -> io.Report:
    report = io.Report(config=run.cfg.to_dict())
    for name in methods:
        result, fit = run.run_method(name)
        report.methods.append(result.to_dict())
        if name == "utdc":
            report.utdc = fit.to_dict()
            _, report.estimator = run.estimate()
    return report


def cmd_utdc(args) -> None:
    cfg = RunConfig.from_args(args)
    cfg.methods = ["utdc"]
    run = Run(cfg)
    report = _report(run, cfg.methods)
    out = Path(cfg.output_dir)
    io.emit_report(report, out)
    if run.target_labels is not None:
        cmap = maps.CalibrationMap("temperature", temperature=report.utdc["temperature"])
        io.emit_reliability_data(run.labelled_target, cmap, cfg.M, out / "reliability_target.csv")
    _print_json(report.utdc)


def cmd_compare(args) -> None:
    cfg = RunConfig.from_args(args)
    run = Run(cfg)
    report = _report(run, cfg.methods)
    io.emit_report(report, cfg.output_dir)
    sys.stdout.write(Path(cfg.output_dir, "table.csv").read_text())


def cmd_sweep_r(args) -> None:
    cfg = RunConfig.from_args(args)
    run = Run(cfg)
    r_values = [float(r) for r in args.r_values.split(",")] if args.r_values else DEFAULT_R_VALUES
    inputs = UtdcInputs(run.source, run.target, 1.0, cfg.M)
    points = r_sweep(inputs, r_values, run.target_labels, cfg.grid)
    rows = [p.to_dict() for p in points]
    out = Path(cfg.output_dir)
    io.atomic_write_text(out / "sweep.json", io.dump_json({"config": cfg.to_dict(), "points": rows}))
    body = [[io.fmt_float(r["ratio"]), io.fmt_float(r["temperature"]), io.fmt_float(r["objective"]),
             "" if r["true_ada_ece"] is None else io.fmt_float(r["true_ada_ece"])] for r in rows]
    io.atomic_write_text(out / "sweep.csv",
                         io.csv_text(["ratio", "temperature", "objective", "true_ada_ece"], body))
    _print_json(rows)


def cmd_synth(args) -> None:
    from .synth import synth_generate

    d = synth_generate(args.seed, args.n_source, args.n_target, args.k,
                       args.scale, args.drop)
    out = Path(args.output_dir)
    io.save_prediction_set(d.source, out / "source_logits.csv", out / "source_labels.csv")
    io.save_prediction_set(d.target, out / "target_logits.csv")
    io.save_labels(out / "target_labels.csv", d.target_labels)
    io.save_matrix(out / "source_features.csv", d.source_features, "f")
    io.save_matrix(out / "target_features.csv", d.target_features, "f")
    meta = {
        "seed": args.seed, "n_source": args.n_source, "n_target": args.n_target, "k": args.k,
        "scale": args.scale, "drop": args.drop,
        "source_accuracy": d.source.accuracy(),
        "target_accuracy": d.labelled_target.accuracy(),
        "true_ratio": d.true_ratio,
        "nominal_ratio": d.nominal_ratio,
        "confidence_shift": d.confidence_shift,
    }
    io.atomic_write_text(out / "synth.json", io.dump_json(meta))
    _print_json(meta)


def _add_grid(p):
    p.add_argument("-M", "--bins", dest="M", type=int, default=metrics.DEFAULT_BINS)
    p.add_argument("--grid-min", type=float, default=0.1)
    p.add_argument("--grid-max", type=float, default=10.0)
    p.add_argument("--grid-step", type=float, default=0.01)


def _add_run(p, methods_default=None):
    for side in ("source", "target"):
        p.add_argument(f"--{side}-logits-path", required=True)
        p.add_argument(f"--{side}-labels-path", required=(side == "source"))
        p.add_argument(f"--{side}-features-path")
    p.add_argument("--meta-records-path")
    p.add_argument("--estimator", choices=ESTIMATORS, default="atc")
    p.add_argument("--ratio", type=float, help="correction ratio R for --estimator explicit-R")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default=".")
    if methods_default is not None:
        p.add_argument("--methods", default=methods_default,
                       help="comma-separated: " + ",".join(baselines.METHODS))
    _add_grid(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="utdc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="adaECE, ECE, NLL and Brier of a labelled set")
    p.add_argument("--logits-path", required=True)
    p.add_argument("--labels-path", required=True)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--map-path", help="apply a saved calibration map instead of --temperature")
    p.add_argument("-M", "--bins", dest="M", type=int, default=metrics.DEFAULT_BINS)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("calibrate", help="fit a calibration map on labelled data")
    p.add_argument("--logits-path", required=True)
    p.add_argument("--labels-path", required=True)
    p.add_argument("--method", choices=("ts-adaece", "ts-nll", "vs", "ms"), default="ts-adaece")
    p.add_argument("--output", help="write the fitted map as JSON")
    p.add_argument("--reliability-path", help="write equal-mass reliability CSV after the map")
    _add_grid(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate-accuracy", help="label-free target accuracy estimate")
    _add_run(p)
    p.set_defaults(func=cmd_estimate_accuracy)

    p = sub.add_parser("utdc", help="calibrate the target temperature without target labels")
    _add_run(p)
    p.set_defaults(func=cmd_utdc)

    p = sub.add_parser("sweep-r", help="UTDC temperature as a function of the ratio R")
    _add_run(p)
    p.add_argument("--r-values", help="comma-separated ratios (default 0.5,...,1.2)")
    p.set_defaults(func=cmd_sweep_r)

    p = sub.add_parser("compare", help="run several methods and write a comparison table")
    _add_run(p, methods_default="uncalibrated,source-ts,source-vs,source-ms,utdc")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="write a synthetic shifted source/target pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-source", type=int, default=5000)
    p.add_argument("--n-target", type=int, default=5000)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--scale", type=float, default=2.5)
    p.add_argument("--drop", type=float, default=0.7)
    p.add_argument("--output-dir", default=".")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UtdcError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, "message": exc.message}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
