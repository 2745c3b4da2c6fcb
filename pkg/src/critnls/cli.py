"""Command line entry point: ``critnls <experiment> --config <path> [--out DIR] [--override k=v ...]``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import Series, error_series, fit_decay, nonresonant_duhamel
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .finalstate import PicardSolver, construct_backward, weighted_norm_terms
from .io import dumps, write_trajectory
from .nonlinearity import (
    check_assumption,
    fourier_coefficients,
    lipschitz_check,
    lipschitz_constant_of_g,
    preset,
)
from .profile import build_profile, gaussian_final_data
from .spectral import Grid, IntegrationError, Trajectory, relative_error, time_nodes

logger = logging.getLogger("critnls")

OUT_ENV = "CRITNLS_OUT"
DEFAULT_ROOT = "critnls-runs"


class Result:
    """Report plus deferred file writers; nothing touches disk until ``write``."""

    def __init__(self, report: dict):
        self.report = report
        self.files = {}

    def add(self, name: str, writer) -> None:
        self.files[name] = writer

    def write(self, out: Path) -> None:
        out.mkdir(parents=True, exist_ok=True)
        for name, writer in sorted(self.files.items()):
            target = out / name
            if name.endswith("/"):
                writer(target)
                continue
            fd, tmp = tempfile.mkstemp(dir=out, prefix=".tmp-")
            os.close(fd)
            writer(tmp)
            os.replace(tmp, target)
        (out / "report.json").write_text(dumps(self.report))


def _grid(cfg: ExperimentConfig) -> Grid:
    return Grid(cfg.dim, cfg.grid_points, cfg.box_length)


def _final_data(cfg: ExperimentConfig):
    return gaussian_final_data(_grid(cfg), eps=cfg.eps, width=cfg.width, delta=cfg.delta_value)


def _safe_fit(times, values, lo, hi):
    try:
        rate, r2 = fit_decay(times, values, lo, hi)
        return {"exponent": rate, "r_squared": r2, "window": [lo, hi]}
    except ValueError as exc:
        return {"exponent": None, "r_squared": None, "window": [lo, hi], "error": str(exc)}


def _spectrum(cfg: ExperimentConfig, nl, result: Result):
    spec = fourier_coefficients(nl, cfg.N)
    result.add("spectrum.csv", spec.to_csv)
    return spec


def run_classify(cfg: ExperimentConfig) -> Result:
    nl = preset(cfg.preset, d=cfg.d)
    result = Result({})
    spec = _spectrum(cfg, nl, result)
    report = check_assumption(spec, cfg.eta)
    result.report.update(
        {
            "classification": report.as_dict(),
            "verdict": report.range_type.value,
            "coefficients": {str(n): [spec[n].real, spec[n].imag] for n in range(-min(cfg.N, 7), min(cfg.N, 7) + 1)},
            "lipschitz": {
                "samples": cfg.samples,
                "seed": cfg.seed,
                "max_ratio": lipschitz_check(nl, cfg.samples, cfg.seed),
                "lip_g": lipschitz_constant_of_g(nl),
                "sup_g": float(np.max(np.abs(nl.sample(4096)))),
            },
        }
    )
    return result


def _diff_trajectory(traj: Trajectory, fd, g1: float) -> Trajectory:
    vals = np.stack([(u - build_profile(fd, t, g1)).values for t, u in zip(traj.times, traj)])
    return Trajectory(traj.grid, traj.times, vals)


def run_scatter(cfg: ExperimentConfig) -> Result:
    nl = preset(cfg.preset, d=cfg.d)
    p = cfg.theorem_parameters()
    fd = _final_data(cfg)
    traj = construct_backward(fd, nl, p, cfg.steps, stride=cfg.stride, dealias=cfg.dealias)
    g1 = traj.meta["g1"]
    mod = error_series(traj, fd, g1)
    unmod = error_series(traj, fd, 0.0)
    lo, hi = cfg.fit_window()
    terms = weighted_norm_terms(_diff_trajectory(traj, fd, g1), p.b)
    table = Series(
        traj.times,
        {"l2_error": mod["l2_error"], "xd_norm": mod["xd_norm"], "l2_error_unmodified": unmod["l2_error"]},
    )
    result = Result(
        {
            "preset": cfg.preset,
            "parameters": p.as_dict(),
            "grid": fd.grid.as_dict(),
            "final_data": {"kind": fd.name, **fd.params, **fd.norms()},
            "g1": g1,
            "time_series": [[t, a, b] for t, a, b in zip(mod.times, mod["l2_error"], mod["xd_norm"])],
            "fitted_exponent": _safe_fit(mod.times, mod["l2_error"], lo, hi),
            "fitted_exponent_to_T_max": _safe_fit(mod.times, mod["l2_error"], lo, np.nextafter(p.T_max, 0)),
            "unmodified_exponent": _safe_fit(unmod.times, unmod["l2_error"], lo, hi),
            "weighted_norm": terms["norm"],
            "weighted_norm_terms": terms,
            "tail_proxy": terms["tail_proxy"],
            "picard_ratios": None,
        }
    )
    _spectrum(cfg, nl, result)
    result.add("series_errors.csv", table.to_csv)
    if cfg.save_fields:
        result.add("fields/", lambda d, traj=traj, h=cfg.hash(): write_trajectory(traj, d, h))
    return result


def run_picard(cfg: ExperimentConfig) -> Result:
    nl = preset(cfg.preset, d=cfg.d)
    p = cfg.theorem_parameters()
    fd = _final_data(cfg)
    solver = PicardSolver(fd, nl, p, nodes=time_nodes(p.T, p.T_max, cfg.nodes), modes=cfg.N)
    iterates, dists = solver.iterate(cfg.picard_iters)
    last = iterates[-1]
    diff = Trajectory(last.grid, last.times, last.values - solver.up)
    terms = weighted_norm_terms(diff, p.b)
    ratios = (dists[1:] / dists[:-1]).tolist() if len(dists) > 1 else []
    back = construct_backward(fd, nl, p, cfg.steps, stride=cfg.steps, dealias=cfg.dealias)
    l2 = np.array([f.norm() for f in diff])
    xd = np.array([f.xd_norm() for f in diff])
    lo, hi = cfg.fit_window()
    result = Result(
        {
            "preset": cfg.preset,
            "parameters": p.as_dict(),
            "grid": fd.grid.as_dict(),
            "g1": solver.g1,
            "time_series": [[t, a, b] for t, a, b in zip(last.times, l2, xd)],
            "fitted_exponent": _safe_fit(last.times, l2, lo, hi),
            "weighted_norm": terms["norm"],
            "weighted_norm_terms": terms,
            "tail_proxy": terms["tail_proxy"],
            "picard_distances": dists.tolist(),
            "picard_ratios": ratios,
            "backward_agreement_at_T": relative_error(last[0], back[0]),
        }
    )
    _spectrum(cfg, nl, result)
    result.add("series_picard.csv", Series(last.times, {"l2_error": l2, "xd_norm": xd}).to_csv)

    def write_distances(path, dists=dists):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "distance"])
            for k, v in enumerate(dists):
                w.writerow([k, repr(float(v))])

    result.add("series_distances.csv", write_distances)
    return result


def run_duhamel(cfg: ExperimentConfig) -> Result:
    nl = preset(cfg.preset, d=cfg.d)
    p = cfg.theorem_parameters()
    fd = _final_data(cfg)
    nodes = time_nodes(p.T, p.T_max, cfg.nodes)
    series = nonresonant_duhamel(fd, nl, p, nodes=nodes, modes=cfg.N)
    lo, hi = cfg.fit_window()
    norms = series["norm"]
    result = Result(
        {
            "preset": cfg.preset,
            "parameters": p.as_dict(),
            "grid": fd.grid.as_dict(),
            "time_series": [[t, v] for t, v in zip(series.times, norms)],
            "identically_zero": bool(np.all(norms == 0)),
            "fitted_exponent": None if np.all(norms == 0) else _safe_fit(series.times, norms, lo, hi),
            "tail_proxy": float(norms[-2]) if len(norms) > 1 else 0.0,
        }
    )
    _spectrum(cfg, nl, result)
    result.add("series_duhamel.csv", series.to_csv)
    return result


RUNNERS = {"classify": run_classify, "scatter": run_scatter, "picard": run_picard, "duhamel": run_duhamel}


def _summary(report: dict) -> dict:
    keys = ("verdict", "fitted_exponent", "weighted_norm", "picard_ratios", "backward_agreement_at_T", "g1")
    return {k: report[k] for k in keys if k in report}


def run_sweep(cfg: ExperimentConfig) -> Result:
    values = cfg.sweep_list()
    configs = [replace(cfg, experiment=cfg.sweep_experiment, out=None, **{cfg.sweep_key: v}) for v in values]
    # runs share nothing; results are collected in input order
    with ThreadPoolExecutor(max_workers=min(cfg.workers, len(configs))) as pool:
        results = list(pool.map(run, configs))
    runs = []
    result = Result({"sweep_key": cfg.sweep_key, "sweep_experiment": cfg.sweep_experiment})
    for i, (v, sub_cfg, sub) in enumerate(zip(values, configs, results)):
        name = f"run_{i:03d}"
        runs.append({"value": v, "dir": name, "config_hash": sub.report["config_hash"], **_summary(sub.report)})
        result.add(f"{name}/", lambda d, sub=sub: sub.write(Path(d)))
    result.report["runs"] = runs
    return result


def run(cfg: ExperimentConfig) -> Result:
    cfg.validate()
    runner = run_sweep if cfg.experiment == "sweep" else RUNNERS[cfg.experiment]
    result = runner(cfg)
    result.report = {
        "experiment": cfg.experiment,
        "config": cfg.as_dict(),
        "config_hash": cfg.hash(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        **result.report,
    }
    return result


def output_dir(cfg: ExperimentConfig, out: str | None) -> Path:
    if out:
        return Path(out)
    if cfg.out:
        return Path(cfg.out)
    root = os.environ.get(OUT_ENV, DEFAULT_ROOT)
    return Path(root) / f"{cfg.experiment}-{cfg.hash()[:12]}"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critnls", description="Critical NLS final-state experiments")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="key=value or JSON config file")
    ap.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV}/<experiment>-<hash>)")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(args.override + [f"experiment={args.experiment}"])
    except ConfigError as exc:
        print(f"critnls: config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(cfg)
    except ConfigError as exc:
        print(f"critnls: config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"critnls: integration failed: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"critnls: {exc}", file=sys.stderr)
        return 3
    out = output_dir(cfg, args.out)
    result.write(out)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
