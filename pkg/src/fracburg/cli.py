"""Command line entry point ``fracburg``.

Commands: ``kernel``, ``solve``, ``profile`` and ``verify``.  Each writes its
outputs plus a JSON manifest (config hash, package version, wall time and a
sha256 for every output file) under the configured output directory.

Exit status: 0 on success, 1 when a verification check does not pass,
2 for configuration errors, 3 for numeric aborts.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, default_config, load_config
from .io import atomic_write_bytes, export_field_csv, export_radial_csv, save_field, write_manifest
from .kernel import KernelError, KernelParams, eval_kernel
from .mild_solver import SolverBlowUp, richardson_ratio, solve, truncated_initial
from .radial import EmptyShellError
from .selfsimilar import PicardDivergence, rquadrature, solve_profile
from .verify import run_suite

log = logging.getLogger("fracburg")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _base_payload(cfg: RunConfig, command: str, t0: float) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config_hash": cfg.config_hash,
        "config": cfg.to_dict(),
        "wall_time": time.perf_counter() - t0,
    }


def _deriv(text: str | None, m: int):
    if not text:
        return None
    k = tuple(int(v) for v in text.split(","))
    if len(k) != m or any(v < 0 for v in k):
        raise ConfigError(f"--deriv needs {m} non-negative integers, got {text!r}")
    return k


def cmd_kernel(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = cfg.out_dir / "kernel"
    deriv = _deriv(args.deriv, cfg.grid.m)
    k = eval_kernel(KernelParams(cfg.grid.m, cfg.model.alpha, args.t, deriv), cfg.grid, unwrap=args.unwrap)
    files = [save_field(out / "kernel.fbf", k.as_field(), cfg.model.alpha, args.t, deriv or (0,) * cfg.grid.m)]
    if args.csv:
        files.append(export_field_csv(k.as_field(), out / "kernel.csv"))
    payload = _base_payload(cfg, "kernel", t0)
    payload.update({"t": args.t, "deriv": deriv, "unwrap": args.unwrap, "mass": k.mass(), "meta": k.meta})
    write_manifest(out / "manifest.json", payload, files)
    print(f"kernel t={args.t} mass={k.mass():.15g} -> {out}")
    return EXIT_OK


def cmd_solve(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = cfg.out_dir / "solve"
    u0 = truncated_initial(cfg.n_trunc, cfg.model, cfg.grid)
    tr = solve(u0, cfg.model, cfg.solver)
    files = [
        save_field(out / f"u_{i:04d}.fbf", f, cfg.model.alpha, float(t))
        for i, (t, f) in enumerate(zip(tr.times, tr.fields))
    ]
    payload = _base_payload(cfg, "solve", t0)
    payload.update({"params": cfg.model.to_dict(), "times": tr.times.tolist(), "diagnostics": tr.diagnostics})
    if args.richardson:
        payload["richardson"] = richardson_ratio(u0, cfg.model, cfg.solver)
        print(f"richardson ratio {payload['richardson']['ratio']:.6g}")
    payload["wall_time"] = time.perf_counter() - t0
    write_manifest(out / "manifest.json", payload, files)
    print(f"solved to t={tr.times[-1]:g}, {len(files)} fields -> {out}")
    return EXIT_OK


def cmd_profile(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = cfg.out_dir / "profile"
    pc = cfg.profile
    rq = rquadrature(pc.nodes, cfg.model, pc.endpoint)
    P = solve_profile(pc.tol, cfg.model, cfg.grid, rq, n_max=pc.n_max)
    files = [
        save_field(out / "U.fbf", P.field, cfg.model.alpha, 1.0),
        export_radial_csv(P.field, args.bins, out / "radial.csv", beta=cfg.model.beta),
    ]
    payload = _base_payload(cfg, "profile", t0)
    payload.update(
        {
            "params": cfg.model.to_dict(),
            "iterations": P.iterations,
            "sup_delta": P.history,
            "residual": P.residual,
            "converged": P.meta.get("converged"),
            "far_c": P.meta.get("far_c"),
        }
    )
    write_manifest(out / "manifest.json", payload, files)
    print(f"profile: {P.iterations} iterations, residual {P.residual:.3e} -> {out}")
    return EXIT_OK if P.meta.get("converged") else EXIT_FAIL


def cmd_verify(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    suites = args.suite if args.suite else list(cfg.suites)
    suite = run_suite(suites, cfg)
    report = Path(args.out) if args.out else cfg.out_dir / "report.json"
    atomic_write_bytes(report, (suite.to_json() + "\n").encode("utf-8"))
    payload = _base_payload(cfg, "verify", t0)
    payload.update({"suites": suites, "passed": suite.passed})
    write_manifest(report.with_name(report.stem + ".manifest.json"), payload, [report])
    sys.stdout.write(suite.to_text())
    for r in suite.results:
        if not r.passed:
            print(f"{r.status}: {r.name} [{r.anchor}] {r.message}", file=sys.stderr)
    return EXIT_OK if suite.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracburg", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="run configuration file (defaults apply when omitted)")
        return p

    k = common(sub.add_parser("kernel", help="evaluate the stable heat kernel on the grid"))
    k.add_argument("--t", type=float, default=1.0, help="time (default 1)")
    k.add_argument("--deriv", help="derivative multi-index, e.g. 1,0")
    k.add_argument("--unwrap", action="store_true", help="subtract the leading periodic images")
    k.add_argument("--csv", action="store_true", help="also write x coordinates and values as CSV")
    k.set_defaults(func=cmd_kernel)

    s = common(sub.add_parser("solve", help="integrate from truncated data"))
    s.add_argument("--richardson", action="store_true", help="also measure the time-step convergence ratio")
    s.set_defaults(func=cmd_solve)

    p = common(sub.add_parser("profile", help="compute the self-similar profile"))
    p.add_argument("--bins", type=int, default=32, help="radial shells in the CSV (default 32)")
    p.set_defaults(func=cmd_profile)

    v = common(sub.add_parser("verify", help="run verification checks"))
    v.add_argument("--suite", action="append", help="check selector (glob, comma list or 'all'); repeatable")
    v.add_argument("--out", help="JSON report path (default <out_dir>/report.json)")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_config()
        return args.func(args, cfg)
    except (ConfigError, EmptyShellError, OSError) as e:
        print(f"fracburg: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverBlowUp, PicardDivergence, KernelError, FloatingPointError) as e:
        print(f"fracburg: numeric abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
