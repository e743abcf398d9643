"""Command dispatch: ``psslab {simulate,geometry,connection,verify}``."""

from __future__ import annotations

import argparse
import logging
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    COMMANDS,
    ConfigError,
    RunConfig,
    initial_datum,
    parse_config,
    resolve_step,
    serialize_config,
    validate_config,
)
from .connection import (
    ConnectionDataError,
    closed_form_samples,
    codazzi_gauss_residuals,
    integrate_connection,
)
from .export import ExportError, ReportBundle, curvature_histogram, export_artifacts
from .geometry import geometry_report
from .solver import evolve
from .verification import run_verification, worker_count

logger = logging.getLogger(__name__)

__all__ = ["run_command", "main", "EXIT_OK", "EXIT_FAIL", "EXIT_USAGE"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
NON_GENERIC = "non-generic: w1^w2 vanishes on every sample; curvature report is empty"


def _provenance(cfg: RunConfig, wall: float) -> dict:
    return {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall,
        "config": cfg.as_dict(),
        "config_text": serialize_config(cfg),
    }


def _simulate(cfg: RunConfig, bundle: ReportBundle):
    traj, rep = evolve(
        initial_datum(cfg), cfg.t_end, dt=cfg.dt, output_stride=cfg.output_stride,
        s_monitor=cfg.s_monitor, datum=cfg.datum_label,
    )
    bundle.monitor = rep.as_dict()
    if not rep.m0_nonnegative:
        bundle.notices.append(
            f"m0 = u0 - u0'' is sign-indefinite (min {traj.frames[0].m.min():.3g}); "
            "positivity and the u_x bound are not asserted"
        )
    if traj.blowup_flag:
        bundle.notices.append("blowup: " + traj.blowup_reason)
        bundle.exit_code = EXIT_FAIL
    return traj


def _geometry(cfg: RunConfig, bundle: ReportBundle):
    traj = _simulate(cfg, bundle)
    branches = cfg.pss_params
    jobs = [(fr, p) for fr in traj.frames for p in branches]

    def work(job):
        fr, p = job
        return geometry_report(fr, p, tau=cfg.tau)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        reports = list(pool.map(work, jobs))
    bundle.geometry = [r.summary() for r in reports]
    extra = {}
    for p in branches:
        K = np.concatenate([r.curvature[r.mask] for r in reports if r.params == p])
        lo, hi, counts = curvature_histogram(K)
        name = "curvature_" + p.label.replace(",", "_").replace("=", "").replace("+", "p").replace("-", "m") + ".csv"
        extra[name] = (["bin_lo", "bin_hi", "count"], [lo, hi, counts])
    if all(r.mask.sum() == 0 for r in reports):
        bundle.notices.append(NON_GENERIC)
    return traj, extra


def _connection(cfg: RunConfig, bundle: ReportBundle):
    p = cfg.connection_params
    span = (cfg.conn_z_start, cfg.conn_z_end)
    if p.mu == 0.0:
        samples = closed_form_samples(p, span, cfg.conn_step)
        info = {"method": "closed form", "stop_reason": ""}
    else:
        run = integrate_connection(cfg.conn_z0, cfg.conn_b0, span, cfg.conn_step, p)
        samples = run.samples
        info = {"method": "rk4", "stop_reason": run.stop_reason, "min_delta": run.min_delta,
                "coefficient_sign": run.coefficient_sign}
        if run.truncated:
            bundle.notices.append("integration stopped early: " + run.stop_reason)
    summary = codazzi_gauss_residuals(samples).as_dict() if len(samples) >= 5 else {}
    bundle.connection = {**info, **summary, "z_range": [samples[0].z, samples[-1].z] if samples else []}
    cols = [np.array([getattr(s, k) for s in samples]) for k in ("z", "x", "a", "b", "c")]
    cols.append(np.array([s.gauss_residual for s in samples]))
    return {"connection.csv": (["z", "x", "a", "b", "c", "gauss_residual"], cols)}


def _verify(cfg: RunConfig, bundle: ReportBundle):
    checks = run_verification(seed=cfg.seed, tol_scale=cfg.tol_scale)
    bundle.checks = [c.as_dict() for c in checks]
    failed = [c.id for c in checks if not c.passed]
    if failed:
        bundle.exit_code = EXIT_FAIL
        bundle.notices.append("failed checks: " + ", ".join(failed))
    return checks


def run_command(cfg: RunConfig, write: bool = True) -> tuple[ReportBundle, list[Path]]:
    """Execute ``cfg.command``; returns the report bundle and the files written.

    Solver blowup and failed checks set ``exit_code`` to 1 but still write
    every artifact produced so far.
    """
    validate_config(cfg)
    cfg = resolve_step(cfg)
    t0 = time.perf_counter()
    bundle = ReportBundle(command=cfg.command, provenance={})
    traj, extra = None, {}
    if cfg.command == "simulate":
        traj = _simulate(cfg, bundle)
    elif cfg.command == "geometry":
        traj, extra = _geometry(cfg, bundle)
    elif cfg.command == "connection":
        extra = _connection(cfg, bundle)
    else:
        _verify(cfg, bundle)
    bundle.provenance = _provenance(cfg, time.perf_counter() - t0)
    files = export_artifacts(cfg.out_dir, bundle, traj, extra) if write else []
    return bundle, files


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psslab", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="INI file with [run] [grid] [pss] [connection] [output]")
    ap.add_argument("--out", type=str, help="output directory (overrides output.directory)")
    ap.add_argument("--seed", type=int, help="seed for randomized checks")
    ap.add_argument("--tol-scale", type=float, help="multiply every check tolerance by FACTOR")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> RunConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"cannot read config {args.config}: {exc}"]) from None
    cfg = parse_config(text, resolve_dt=False, default_command=args.command)
    over = {"command": args.command}
    if args.out is not None:
        over["out_dir"] = args.out
    if args.seed is not None:
        over["seed"] = args.seed
    if args.tol_scale is not None:
        over["tol_scale"] = args.tol_scale
    return validate_config(replace(cfg, **over))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        bundle, files = run_command(cfg)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConnectionDataError as exc:
        print(f"connection error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for c in bundle.checks:
        tag = "PASS" if c["passed"] else "FAIL"
        print(f"[{tag}] {c['id']:<5} {c['name']}: measured={c['measured']:.3e} tol={c['tolerance']:.3e}")
    for note in bundle.notices:
        print("notice:", note)
    print(f"{cfg.command}: wrote {len(files)} file(s) to {cfg.out_dir} (exit {bundle.exit_code})")
    return bundle.exit_code


if __name__ == "__main__":
    sys.exit(main())
