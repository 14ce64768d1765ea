"""Command line front end: ``wfset <subcommand> --config run.toml``.

Exit codes: 0 success, 1 failed validation (``validate`` only), 2 bad
configuration, 3 numerical failure (Nyquist budget, orbit or norm drift).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import _io
from .config import MODES, RunConfig, as_points, load_config
from .errors import ConfigError, DerivativeOrderError, DimensionError, WFSetError, WindowError
from .propagator import SolverConfig, WaveField, propagate
from .wpt import AnalyticSignal, fft_xi_axis, signal_from_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _err(msg: str):
    print(f"wfset: {msg}", file=sys.stderr)


# -- shared builders ----------------------------------------------------------------


def _signal(cfg: RunConfig, default_source: str):
    sec = dict(cfg.section("signal"))
    source = sec.pop("source", default_source)
    mollify = sec.pop("mollify", None)
    try:
        sig = signal_from_config(sec, cfg.n)
    except (ValueError, DimensionError) as exc:
        raise ConfigError(str(exc)) from exc
    if source == "analytic":
        return sig
    if source != "sampled":
        raise ConfigError(f"signal.source must be 'analytic' or 'sampled', got {source!r}")
    L, N = _grid(cfg)
    return sig.sample(L, N, mollify)


def _grid(cfg: RunConfig):
    L = float(cfg.get("grid", "L", 40.0))
    N = int(cfg.get("grid", "N", 1024))
    if not L > 0 or N < 2:
        raise ConfigError("grid needs L > 0 and N >= 2")
    return L, N


def _solver(cfg: RunConfig) -> SolverConfig:
    sec = cfg.section("solver")
    try:
        return SolverConfig(dt=sec.get("dt"), stability=float(sec.get("stability", 0.5)),
                            drift_tol=float(sec.get("drift_tol", 1e-6)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _prepare_out(cfg: RunConfig, args) -> Path:
    out = Path(args.out) if getattr(args, "out", None) else cfg.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


# -- subcommands -----------------------------------------------------------------------


def cmd_validate(cfg: RunConfig, args) -> int:
    from .coeffs import radial_samples, validate_decay

    model = cfg.model()
    sec = cfg.section("validate")
    alpha_max = int(sec.get("alpha_max", min(2, model.max_order)))
    samples = radial_samples(model.n, float(sec.get("r_max", 1e3)), int(sec.get("samples", 400)))
    times = tuple(float(t) for t in sec.get("times", [0.0]))
    try:
        report = validate_decay(model, alpha_max, samples, times)
    except DerivativeOrderError as exc:
        raise ConfigError(str(exc)) from exc
    out = _prepare_out(cfg, args)
    path = _io.write_json(out / "decay_report.json", {"model": cfg.section("model"), **report.to_dict()})
    print(f"{'PASS' if report.passed else 'FAIL'} decay conditions -> {path}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_flow(cfg: RunConfig, args) -> int:
    from .flow import solve_bicharacteristics

    model = cfg.model()
    n = model.n
    t = float(cfg.get("flow", "t", 1.0))
    pts = as_points(cfg.get("flow", "points", [[0.0] * n + [1.0] * n]), 2 * n, "flow.points")
    count = int(cfg.get("flow", "samples", 33))
    backend = cfg.get("flow", "backend")
    s = np.linspace(min(0.0, t), max(0.0, t), count)
    out = _prepare_out(cfg, args)
    summary = []
    for i, row in enumerate(pts):
        x, xi = row[:n], row[n:]
        tr = solve_bicharacteristics(model, t, x, xi, s, backend=backend)
        free = x[None, :] + (tr.s - t)[:, None] * xi[None, :]
        e = tr.energy(model)
        tr.to_csv(out / f"trajectory_{i}.csv", {"model": cfg.section("model")})
        summary.append({"index": i, "x": x, "xi": xi, "free_line_max_dev": float(np.max(np.abs(tr.x - free))),
                        "energy_drift": float(np.max(np.abs(e - e[-1]))), "nsteps": tr.nsteps})
    _io.write_json(out / "flow_summary.json", {"t": t, "model": cfg.section("model"), "orbits": summary})
    print(f"wrote {len(pts)} trajectories to {out}")
    return EXIT_OK


def cmd_wpt(cfg: RunConfig, args) -> int:
    from .windows import evolved
    from .wpt import wpt_grid

    f = _signal(cfg, "sampled")
    lam = float(cfg.get("wpt", "lam", 1.0))
    t = float(cfg.get("wpt", "t", 0.0))
    w = evolved(cfg.window(), lam, t)
    n = cfg.n
    if n != 1:
        raise ConfigError("the wpt subcommand writes 1D slices; use n = 1")
    if "xi" in cfg.section("wpt"):
        xi = np.asarray(cfg.get("wpt", "xi"), dtype=float)
    elif isinstance(f, WaveField):
        xi = fft_xi_axis(f, float(cfg.get("wpt", "xi_center", 0.0)), cfg.get("wpt", "xi_count"),
                         int(cfg.get("wpt", "xi_refine", 1)))
    else:
        raise ConfigError("analytic signals need an explicit wpt.xi list")
    x = np.asarray(cfg.get("wpt", "x", list(np.linspace(-4.0, 4.0, 33))), dtype=float)
    sl = wpt_grid(f, w, [x], [xi], jobs=args.jobs)
    out = _prepare_out(cfg, args)
    sl.to_csv(out / "wpt_slice.csv")
    info = {"method": sl.method, "warning": sl.warning, "window": w.describe(), "signal": f.describe(),
            "lam": lam, "t": t}
    if isinstance(f, WaveField):
        info["signal_norm"] = f.norm()
    _io.write_json(out / "wpt_summary.json", info)
    if sl.warning:
        _err(sl.warning)
    print(f"wrote {sl.values.size} transform values ({sl.method}) to {out}")
    return EXIT_OK


def cmd_propagate(cfg: RunConfig, args) -> int:
    model = cfg.model()
    u0 = _signal(cfg, "sampled")
    if not isinstance(u0, WaveField):
        raise ConfigError("propagate needs a sampled signal")
    t0 = float(cfg.get("solver", "t0", 0.0))
    t1 = float(cfg.get("solver", "t1", 1.0))
    u1, log = propagate(model, WaveField(u0.values, u0.L, t0), t0, t1, _solver(cfg))
    out = _prepare_out(cfg, args)
    u0.save(out / "field_initial")
    u1.save(out / "field_final")
    log.to_csv(out / "norm_log.csv", {"model": cfg.section("model"), "drift": log.drift})
    print(f"propagated to t = {t1}: norm drift {log.drift:.3e}")
    return EXIT_OK


def cmd_transport(cfg: RunConfig, args) -> int:
    from .transport import evolve_field, residual_sweep, sweep_columns

    model = cfg.model()
    n = model.n
    u0 = _signal(cfg, "sampled")
    if not isinstance(u0, WaveField):
        raise ConfigError("transport needs a sampled signal")
    t = float(cfg.get("transport", "t", 0.5))
    lambdas = [float(v) for v in cfg.get("transport", "lambdas", [16.0, 64.0, 256.0])]
    raw = as_points(cfg.get("transport", "points", [[0.0] * n + [0.05] * n]), 2 * n, "transport.points")
    points = [(r[:n], r[n:]) for r in raw]
    u_t = evolve_field(model, u0, t, _solver(cfg))
    rows = residual_sweep(model, u0, cfg.window(), lambdas, t, points, u_t=u_t)
    out = _prepare_out(cfg, args)
    _io.write_table(out / "transport_residuals.csv", sweep_columns(n), rows,
                    {"model": cfg.section("model"), "grid": {"L": u0.L, "N": u0.N}})
    worst = float(rows[:, -2].max())
    _io.write_json(out / "transport_summary.json", {"max_residual": worst, "t": t, "lambdas": lambdas})
    print(f"max transport residual {worst:.3e}")
    return EXIT_OK


def build_query(cfg: RunConfig, mode: str, u0=None):
    from .detector import DetectionQuery, default_lambdas

    n = cfg.n
    sec = cfg.section("query", required=True)
    if "lambdas" in sec:
        lambdas = np.asarray(sec["lambdas"], dtype=float)
    else:
        lo = float(sec.get("lambda_min", 8.0))
        hi = float(sec.get("lambda_max", 1024.0))
        a = float(sec.get("a", 1.5))
        if isinstance(u0, WaveField) and "lambda_max" not in sec:
            # default grid stops at the Nyquist budget of the data grid
            hi = min(hi, math.pi * u0.N / (2.0 * a * u0.L))
        lambdas = default_lambdas(lo, hi, int(sec.get("lambda_count", 16)))
    try:
        return DetectionQuery(
            t=float(sec.get("t", 0.0)),
            x0=np.broadcast_to(np.asarray(sec.get("x0", 0.0), dtype=float), (n,)),
            xi0=np.broadcast_to(np.asarray(sec.get("xi0", 1.0), dtype=float), (n,)),
            r=float(sec.get("r", 1.0)), gamma=float(sec.get("gamma", 0.5)), a=float(sec.get("a", 1.5)),
            lambdas=lambdas, order=int(sec.get("order", 4)), window=cfg.window(), mode=mode,
            per_axis=int(sec.get("per_axis", 5)), directions=int(sec.get("directions", 5)),
            radii=int(sec.get("radii", 3)), margin=float(sec.get("margin", 0.5)),
            residual_threshold=float(sec.get("residual_threshold", 0.25)), seed=cfg.seed,
        )
    except (ValueError, DimensionError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_detect(cfg: RunConfig, args) -> int:
    from .detector import detect_family, window_family

    model = cfg.model()
    mode = args.mode or cfg.mode
    u0 = _signal(cfg, "analytic")
    q = build_query(cfg, mode, u0)
    family = cfg.get("window", "family")
    windows = window_family(cfg.n, family) if family is not None else [q.window]
    report = detect_family(u0, model, q, windows, jobs=args.jobs)
    out = _prepare_out(cfg, args)
    report.write(out)
    for spec, v in zip(windows, report.verdicts):
        print(f"{spec.label or spec.kind}: {v.label} (slope {v.slope:.3f}, residual {v.residual:.3f})")
    return EXIT_OK


HELP = {
    "validate": "check the decay conditions of the model",
    "flow": "integrate classical orbits",
    "wpt": "wave packet transform slice of a signal",
    "propagate": "solve the Schroedinger equation on a periodic grid",
    "transport": "residuals of the transport identity",
    "detect": "lambda-sweep wave front set detection",
}

COMMANDS = {
    "validate": cmd_validate,
    "flow": cmd_flow,
    "wpt": cmd_wpt,
    "propagate": cmd_propagate,
    "transport": cmd_transport,
    "detect": cmd_detect,
}


def _add_globals(p, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="TOML run configuration")
    p.add_argument("--out", metavar="DIR", default=d, help="output directory (overrides the config)")
    p.add_argument("--jobs", metavar="INT", type=int, default=argparse.SUPPRESS if suppress else 1,
                   help="worker threads for independent sweep cells")
    p.add_argument("--mode", choices=MODES, default=d, help="detector evaluation points (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wfset", description="Wave front set experiments for variable-coefficient "
                                                           "Schroedinger equations.")
    _add_globals(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=HELP[name])
        _add_globals(sp, suppress=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.jobs is None or args.jobs < 1:
        _err("--jobs must be a positive integer")
        return EXIT_CONFIG
    if not args.config:
        _err("--config PATH is required")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, WindowError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except WFSetError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_NUMERIC
    except (ValueError, FloatingPointError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
