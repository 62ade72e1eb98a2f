"""Command-line front end.

Each subcommand validates its configuration, runs one experiment, and
writes artifacts into --out: one or more data CSVs plus a summary.json
echoing the exact configuration (with its SHA-256 hash, embedded in every
artifact) so the run can be reproduced from the summary alone.  Outputs
are byte-deterministic for a fixed seed and independent of --threads;
wall-clock time therefore goes to a separate timing.json sidecar instead
of summary.json.

Invalid configurations exit nonzero with a machine-readable JSON object
on stderr, and partially written outputs are removed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import RandcritError
from .geometry import Region, cubic_model, rigid_model
from .kacrice import GridSpec, density_grid, expected_real_zeros
from .montecarlo import empirical_real_zero_count, empirical_zero_density
from .ensembles import build_ensemble
from .vacua import (
    continuum_flux_count,
    enumerate_attractor_points,
    enumerate_flux_vacua,
    records_to_csv,
    w2_statistics,
)


def _parse_grid(text: str) -> GridSpec:
    """xmin:xmax:n (square) or xmin:xmax:ymin:ymax:nx:ny."""
    parts = text.split(":")
    if len(parts) == 3:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        return GridSpec(a, b, a, b, n, n)
    if len(parts) == 6:
        return GridSpec(float(parts[0]), float(parts[1]),
                        float(parts[2]), float(parts[3]),
                        int(parts[4]), int(parts[5]))
    raise ValueError(f"bad grid spec {text!r}")


def _parse_region(text: str) -> Region:
    parts = [float(p) for p in text.split(":")]
    if len(parts) != 4:
        raise ValueError(f"bad region spec {text!r} (want xmin:xmax:ymin:ymax)")
    return Region(*parts)


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _prepend_hash(path: Path, h: str) -> None:
    body = path.read_bytes()
    path.write_bytes(f"# config_hash={h}\n".encode() + body)


class _Run:
    """Tracks written artifacts so failures can clean up."""

    def __init__(self, outdir: Path, cfg: dict):
        self.outdir = outdir
        self.cfg = cfg
        self.hash = _config_hash(cfg)
        self.files: list[Path] = []
        outdir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.outdir / name
        self.files.append(p)
        return p

    def finish(self, outputs: dict) -> None:
        summary = {
            "command": self.cfg["command"],
            "config": self.cfg,
            "config_hash": self.hash,
            "version": __version__,
            "outputs": outputs,
            "artifacts": [p.name for p in self.files],
        }
        with open(self.path("summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def cleanup(self) -> None:
        for p in self.files:
            try:
                p.unlink()
            except OSError:
                pass


def _cmd_density(args, run: _Run) -> dict:
    e = build_ensemble(args.ensemble, args.N)
    grid = _parse_grid(args.grid)
    dg = density_grid(e, grid)
    p = run.path("density.csv")
    dg.to_csv(p)
    _prepend_hash(p, run.hash)
    return {"total_mass": dg.total_mass}


def _cmd_zeros_mc(args, run: _Run) -> dict:
    e = build_ensemble(args.ensemble, args.N)
    grid = _parse_grid(args.grid)
    emp = empirical_zero_density(e, args.samples, grid, args.seed,
                                 n_threads=args.threads)
    p = run.path("empirical.csv")
    emp.to_csv(p)
    _prepend_hash(p, run.hash)
    return {"total_roots": emp.total_roots, "overflow": emp.overflow,
            "n_samples": emp.n_samples}


def _cmd_real_zeros(args, run: _Run) -> dict:
    rows = []
    for n in args.N:
        expected = expected_real_zeros(n)
        if args.samples > 0:
            mean, stderr = empirical_real_zero_count(
                n, args.samples, args.seed, n_threads=args.threads)
        else:
            mean, stderr = float("nan"), float("nan")
        rows.append((n, expected, mean, stderr))
    p = run.path("real_zeros.csv")
    with open(p, "w", newline="\n") as fh:
        fh.write("N,expected,mc_mean,mc_stderr\n")
        for n, ex, mm, ss in rows:
            fh.write(f"{n},{ex:.17g},{mm:.17g},{ss:.17g}\n")
    _prepend_hash(p, run.hash)
    return {"rows": len(rows)}


def _cmd_attractors(args, run: _Run) -> dict:
    m = cubic_model(args.kappa)
    region = _parse_region(args.region)
    report, records = enumerate_attractor_points(
        m, region, args.zmax, args.box, n_threads=args.threads)
    p = run.path("attractors.csv")
    records_to_csv(records, p)
    _prepend_hash(p, run.hash)
    rep = run.path("count_report.json")
    payload = report.to_json_dict()
    payload["config_hash"] = run.hash
    with open(rep, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"count": report.count, "prediction": report.prediction,
            "ratio": report.ratio}


def _cmd_flux_vacua(args, run: _Run) -> dict:
    m = rigid_model()
    region = _parse_region(args.region)
    report, records = enumerate_flux_vacua(
        m, region, args.lmax, args.box, n_threads=args.threads)
    p = run.path("flux_vacua.csv")
    records_to_csv(records, p)
    _prepend_hash(p, run.hash)
    rep = run.path("count_report.json")
    payload = report.to_json_dict()
    payload["config_hash"] = run.hash
    if len(records) >= 100:
        w2 = w2_statistics(records)
        payload["w2"] = {
            "q": w2.q, "n_lower": w2.n_lower,
            "ks_distance": w2.ks_distance, "ks_pvalue": w2.ks_pvalue,
            "counts": w2.counts.tolist(),
            "edges": [float(x) for x in w2.edges],
        }
    with open(rep, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"count": report.count, "signed_index": report.signed_index,
            "prediction": report.prediction}


def _cmd_flux_continuum(args, run: _Run) -> dict:
    m = rigid_model()
    region = _parse_region(args.region)
    estimate, stderr = continuum_flux_count(
        m, region, args.lmax, args.samples, args.seed, args.box_radius,
        n_threads=args.threads)
    p = run.path("continuum.json")
    payload = {"estimate": estimate, "stderr": stderr,
               "config_hash": run.hash}
    with open(p, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def _cmd_report(args, run: _Run) -> dict:
    merged = []
    for src in args.inputs:
        with open(src) as fh:
            merged.append(json.load(fh))
    p = run.path("report.json")
    with open(p, "w") as fh:
        json.dump({"config_hash": run.hash, "inputs": args.inputs,
                   "summaries": merged}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"inputs": len(merged)}


_COMMANDS = {
    "density": _cmd_density,
    "zeros-mc": _cmd_zeros_mc,
    "real-zeros": _cmd_real_zeros,
    "attractors": _cmd_attractors,
    "flux-vacua": _cmd_flux_vacua,
    "flux-continuum": _cmd_flux_continuum,
    "report": _cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="randcrit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", type=str, default=".")
        p.add_argument("--config", type=str, default=None)

    p = sub.add_parser("density")
    common(p)
    p.add_argument("--ensemble", choices=["kac", "kostlan"], default="kostlan")
    p.add_argument("-N", type=int, default=20)
    p.add_argument("--grid", type=str, default="-3:3:200")

    p = sub.add_parser("zeros-mc")
    common(p)
    p.add_argument("--ensemble", choices=["kac", "kostlan"], default="kostlan")
    p.add_argument("-N", type=int, default=20)
    p.add_argument("--grid", type=str, default="-3:3:60")
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("real-zeros")
    common(p)
    p.add_argument("-N", type=int, action="append", required=True)
    p.add_argument("--samples", type=int, default=0)

    p = sub.add_parser("attractors")
    common(p)
    p.add_argument("--kappa", type=float, default=6.0)
    p.add_argument("--zmax", type=float, required=True)
    p.add_argument("--region", type=str, default="-0.4:0.4:0.8:1.6")
    p.add_argument("--box", type=int, default=10)

    p = sub.add_parser("flux-vacua")
    common(p)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--region", type=str, default="-0.4:0.4:1:2")
    p.add_argument("--box", type=int, default=40)

    p = sub.add_parser("flux-continuum")
    common(p)
    p.add_argument("--lmax", type=float, required=True)
    p.add_argument("--region", type=str, default="-0.4:0.4:1:2")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--box-radius", type=float, default=30.0)

    p = sub.add_parser("report")
    common(p)
    p.add_argument("inputs", nargs="+")
    return ap


def _apply_config_file(args: argparse.Namespace) -> None:
    if not args.config:
        return
    with open(args.config) as fh:
        cfg = json.load(fh)
    for key, val in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"unknown config key {key!r}")
        # command-line flags that were explicitly given keep priority via
        # the convention that the config file only fills defaults
        if getattr(args, attr) in (None,) or key in cfg:
            setattr(args, attr, val)


def _resolve_threads(args) -> None:
    if args.threads is None:
        env = os.environ.get("RANDCRIT_THREADS")
        args.threads = int(env) if env else 1
    if args.threads < 1:
        raise ValueError("threads must be >= 1")


def _join_window_flags(argv: list[str]) -> list[str]:
    """Glue `--grid -3:3:200` into `--grid=-3:3:200` for argparse."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--grid", "--region") and i + 1 < len(argv) \
                and argv[i + 1].startswith("-") and ":" in argv[i + 1]:
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    ap = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = ap.parse_args(_join_window_flags(list(argv)))
    run = None
    try:
        _apply_config_file(args)
        _resolve_threads(args)
        # out/threads/config are execution details: artifacts are
        # contractually independent of them, so they stay out of the
        # echoed config and its hash
        cfg = {k: v for k, v in sorted(vars(args).items())
               if k not in ("config", "out", "threads")}
        run = _Run(Path(args.out), cfg)
        t0 = time.perf_counter()
        outputs = _COMMANDS[args.command](args, run)
        outputs = json.loads(json.dumps(outputs, default=float))
        run.finish(outputs)
        # non-deterministic timing lives outside summary.json on purpose
        with open(run.outdir / "timing.json", "w") as fh:
            json.dump({"wall_seconds": time.perf_counter() - t0}, fh)
            fh.write("\n")
        return 0
    except (RandcritError, ValueError, OSError, json.JSONDecodeError) as exc:
        if run is not None:
            run.cleanup()
        err = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
