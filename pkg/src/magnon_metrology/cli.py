"""Command-line front end: config-driven runs, oracle checks and fits."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .critical import CriticalModel, gamma_c_closed, joint_evolve_critical, t_star_critical
from .errors import ConfigInvalid, InvalidModel, MagnonMetrologyError, SuperradiantPhase
from .fisher import fd_stencil, fisher
from .gaussian import entanglement_entropy, photon_number
from .oracles import DEFAULT_TAIL_TOL, FockConfig, fock_run, lyapunov_integrate
from .rwa import RwaModel, evolve_cavity, joint_evolve_noiseless, t_star
from .sweep import SweepRecord, critical_scaling, critical_sweep, hl_sweep, loglog_fit, nu_family, time_series

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
SERIES_HEADER = ["t", "F_Q", "F_C", "S", "n_th", "r", "phi", "N_c"]
CRITICAL_HEADER = ["g", "gc_minus_g", "t_star", "F_Q", "F_C"]
FOCK_THRESHOLD = 1e-6
LYAPUNOV_THRESHOLD = 1e-8

CONFIG_HELP = """\
config files are JSON objects; unknown fields are rejected.

common fields
  mode         rwa | critical | sweep-hl | sweep-critical | nu-check | oracle-check
  output       CSV path (a JSON sidecar with the same stem is written next to it)

grid objects (t_grid, r0_grid, g_grid, r_grid)
  start, stop  numbers
  count        integer >= 1
  spacing      "linear" (default) or "geometric"
  units        t_grid only: "absolute" (default) or "t_star"

rwa model fields
  omega_c, B0, g            required; omega_m = B0 + B
  B, B_x, B_y, kappa, n_noise, r0    optional, default 0
critical model fields
  omega_c, omega_m, g       required, g < sqrt(omega_c omega_m)/2

mode rwa             model, t_grid, output
mode critical        model, t_grid, output (t* = pi/eps_-)
mode sweep-hl        model (without r0), r0_grid, output,
                     timing "t_star" | "peak" (default t_star),
                     window [lo, hi] in units of t* (default [0.5, 1.5]), grid_n (default 64)
mode sweep-critical  model {omega_c, omega_m}, g_grid over (g_c - g)/g_c, output,
                     t_fractions (default [1.0, 0.25]), n (default 1)
                     the first fraction goes to output, each further one to
                     <stem>_f<fraction>.csv
mode nu-check        nu, r_grid, output (synthetic family; the t column is 0)
mode oracle-check    model_type "rwa" | "critical", model, t, oracle "fock" | "lyapunov",
                     cutoff (optional), tail_tol (default 1e-10), output (optional)

MM_SEED is reserved and ignored: every computation is deterministic.
"""

REQUIRED = object()
RWA_FIELDS = {"omega_c": REQUIRED, "B0": REQUIRED, "g": REQUIRED, "B": 0.0, "B_x": 0.0, "B_y": 0.0, "kappa": 0.0, "n_noise": 0.0, "r0": 0.0}
CRITICAL_FIELDS = {"omega_c": REQUIRED, "omega_m": REQUIRED, "g": REQUIRED}
GRID_FIELDS = {"start": REQUIRED, "stop": REQUIRED, "count": REQUIRED, "spacing": "linear"}


class NumericalFailure(Exception):
    def __init__(self, operation: str, error: Exception):
        super().__init__(f"{operation} failed: {type(error).__name__}: {error}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigInvalid(f"{where} must be a finite number, got {value!r}")
    return float(value)


def _integer(value, where: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigInvalid(f"{where} must be an integer >= {minimum}, got {value!r}")
    return value


def _fields(obj, spec: dict, where: str) -> dict:
    """Check keys against ``spec`` (REQUIRED marks mandatory keys) and fill defaults."""
    if not isinstance(obj, dict):
        raise ConfigInvalid(f"{where} must be an object")
    unknown = sorted(set(obj) - set(spec))
    if unknown:
        raise ConfigInvalid(f"unknown field {where}.{unknown[0]}" if where else f"unknown field {unknown[0]}")
    out = {}
    for key, default in spec.items():
        name = f"{where}.{key}" if where else key
        if key not in obj:
            if default is REQUIRED:
                raise ConfigInvalid(f"missing required field {name}")
            out[key] = default
        else:
            out[key] = obj[key]
    return out


def _grid(obj, where: str, allow_units: bool = False) -> tuple[dict, np.ndarray]:
    spec = dict(GRID_FIELDS, **({"units": "absolute"} if allow_units else {}))
    g = _fields(obj, spec, where)
    g["start"] = _number(g["start"], f"{where}.start")
    g["stop"] = _number(g["stop"], f"{where}.stop")
    g["count"] = _integer(g["count"], f"{where}.count", 1)
    if g["spacing"] not in ("linear", "geometric"):
        raise ConfigInvalid(f"{where}.spacing must be 'linear' or 'geometric'")
    if allow_units and g["units"] not in ("absolute", "t_star"):
        raise ConfigInvalid(f"{where}.units must be 'absolute' or 't_star'")
    if g["spacing"] == "geometric":
        if g["start"] <= 0 or g["stop"] <= 0:
            raise ConfigInvalid(f"{where} needs positive start and stop for geometric spacing")
        values = np.geomspace(g["start"], g["stop"], g["count"])
    else:
        values = np.linspace(g["start"], g["stop"], g["count"])
    return g, values


def _model(obj, kind: str, where: str = "model", skip: tuple = ()):
    spec = RWA_FIELDS if kind == "rwa" else CRITICAL_FIELDS
    spec = {k: v for k, v in spec.items() if k not in skip}
    fields = _fields(obj, spec, where)
    fields = {k: _number(v, f"{where}.{k}") for k, v in fields.items()}
    try:
        return fields, (RwaModel(**fields) if kind == "rwa" else CriticalModel(**fields))
    except (InvalidModel, SuperradiantPhase) as err:
        raise ConfigInvalid(f"{where}: {err}") from err


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _series_rows(records: list[SweepRecord]):
    return [[getattr(rec, k) for k in SERIES_HEADER] for rec in records]


def _sidecar(path: Path, payload: dict) -> None:
    path.with_suffix(".json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _guard(operation: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigInvalid:
        raise
    except MagnonMetrologyError as err:
        raise NumericalFailure(operation, err) from err
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        raise NumericalFailure(operation, err) from err


def _output(cfg: dict, required: bool = True) -> Path | None:
    out = cfg.get("output")
    if out is None:
        if required:
            raise ConfigInvalid("missing required field output")
        return None
    if not isinstance(out, str) or not out:
        raise ConfigInvalid("output must be a non-empty path string")
    return Path(out)


def _run_series(cfg: dict, kind: str, threads):
    resolved = _fields(cfg, {"mode": REQUIRED, "model": REQUIRED, "t_grid": REQUIRED, "output": REQUIRED}, "")
    fields, model = _model(resolved["model"], kind)
    grid, times = _grid(resolved["t_grid"], "t_grid", allow_units=True)
    if grid["units"] == "t_star":
        unit = _guard("t_star", t_star, model) if kind == "rwa" else t_star_critical(model)
        times = times * unit
    if np.any(times < 0):
        raise ConfigInvalid("t_grid values must be non-negative")
    resolved.update(model=fields, t_grid=grid)
    records = _guard("time_series", time_series, model, times, threads)
    path = _output(resolved)
    _write_csv(path, SERIES_HEADER, _series_rows(records))
    _sidecar(path, {"config": resolved, "files": [str(path)]})


def _run_sweep_hl(cfg: dict, threads):
    spec = {"mode": REQUIRED, "model": REQUIRED, "r0_grid": REQUIRED, "output": REQUIRED, "timing": "t_star", "window": [0.5, 1.5], "grid_n": 64}
    resolved = _fields(cfg, spec, "")
    fields, model = _model(resolved["model"], "rwa", skip=("r0",))
    grid, r0s = _grid(resolved["r0_grid"], "r0_grid")
    if resolved["timing"] not in ("t_star", "peak"):
        raise ConfigInvalid("timing must be 't_star' or 'peak'")
    win = resolved["window"]
    if not isinstance(win, list) or len(win) != 2:
        raise ConfigInvalid("window must be a list [lo, hi]")
    win = [_number(w, "window") for w in win]
    if not 0 < win[0] < win[1]:
        raise ConfigInvalid("window must satisfy 0 < lo < hi")
    resolved["grid_n"] = _integer(resolved["grid_n"], "grid_n", 16)
    if len(r0s) < 8:
        raise ConfigInvalid("r0_grid.count must be at least 8")
    resolved.update(model=fields, r0_grid=grid, window=win)
    fit, records = _guard(
        "snl_hl_experiment", hl_sweep, model, r0s, resolved["timing"], tuple(win), resolved["grid_n"], threads
    )
    path = _output(resolved)
    _write_csv(path, SERIES_HEADER, _series_rows(records))
    _sidecar(
        path,
        {
            "config": resolved,
            "files": [str(path)],
            "r0": [float(r) for r in r0s],
            "fits": {"F_C_vs_N_c": asdict(fit) | {"flagged": fit.flagged}},
        },
    )


def _run_sweep_critical(cfg: dict, threads):
    spec = {"mode": REQUIRED, "model": REQUIRED, "g_grid": REQUIRED, "output": REQUIRED, "t_fractions": [1.0, 0.25], "n": 1}
    resolved = _fields(cfg, spec, "")
    model = _fields(resolved["model"], {"omega_c": REQUIRED, "omega_m": REQUIRED}, "model")
    model = {k: _number(v, f"model.{k}") for k, v in model.items()}
    if min(model.values()) <= 0:
        raise ConfigInvalid("model frequencies must be positive")
    grid, gaps = _grid(resolved["g_grid"], "g_grid")
    if np.any(gaps <= 0) or np.any(gaps > 1):
        raise ConfigInvalid("g_grid values are (g_c - g)/g_c and must lie in (0, 1]")
    fracs = resolved["t_fractions"]
    if not isinstance(fracs, list) or not fracs:
        raise ConfigInvalid("t_fractions must be a non-empty list")
    fracs = [_number(f, "t_fractions") for f in fracs]
    if any(f <= 0 for f in fracs) or len(set(fracs)) != len(fracs):
        raise ConfigInvalid("t_fractions must be distinct positive numbers")
    resolved["n"] = _integer(resolved["n"], "n", 1)
    resolved.update(model=model, g_grid=grid, t_fractions=fracs)
    records = _guard(
        "fisher_at_special_times", critical_sweep, model["omega_c"], model["omega_m"], gaps, fracs, resolved["n"], threads
    )
    scalings = _guard("loglog_fit", critical_scaling, records)
    path = _output(resolved)
    files, fits = [], []
    for i, sc in enumerate(scalings):
        target = path if i == 0 else path.with_name(f"{path.stem}_f{sc.fraction!r}{path.suffix}")
        group = [rec for rec in records if rec.inputs["fraction"] == sc.fraction]
        _write_csv(target, CRITICAL_HEADER, [[rec.inputs["g"], rec.inputs["gc_minus_g"], rec.inputs["t_star"], rec.F_Q, rec.F_C] for rec in group])
        files.append(str(target))
        fits.append(
            {
                "fraction": sc.fraction,
                "file": str(target),
                "slope_F_C_over_t_star_sq": sc.rescaled.slope,
                "slope_F_C": sc.raw.slope,
                "F_C_over_t_star_sq": asdict(sc.rescaled) | {"flagged": sc.rescaled.flagged},
                "F_C": asdict(sc.raw) | {"flagged": sc.raw.flagged},
            }
        )
    _sidecar(path, {"config": resolved, "files": files, "fits": fits})


def _run_nu_check(cfg: dict, threads):
    resolved = _fields(cfg, {"mode": REQUIRED, "nu": REQUIRED, "r_grid": REQUIRED, "output": REQUIRED}, "")
    nu = _number(resolved["nu"], "nu")
    if nu < 0:
        raise ConfigInvalid("nu must be non-negative")
    grid, rs = _grid(resolved["r_grid"], "r_grid")
    resolved.update(nu=nu, r_grid=grid)
    family = nu_family(nu)

    def row(r):
        p, dp = fd_stencil(family, float(r))
        fi = fisher(p, dp)
        return [0.0, fi.f_q, fi.f_c, entanglement_entropy(p.n_th), p.n_th, p.r, p.phi, photon_number(p)]

    rows = [_guard("nu_scaling_check", row, r) for r in rs]
    fit = _guard("loglog_fit", loglog_fit, [(rw[7], rw[1]) for rw in rows])
    path = _output(resolved)
    _write_csv(path, SERIES_HEADER, rows)
    _sidecar(
        path,
        {
            "config": resolved,
            "files": [str(path)],
            "fits": {"F_Q_vs_N_c": asdict(fit) | {"flagged": fit.flagged}, "expected_slope": 4 / (2 + nu)},
        },
    )


def oracle_check(cfg: dict) -> dict:
    """Run a closed form against its oracle; raises NumericalFailure above threshold."""
    spec = {
        "mode": "oracle-check",
        "model_type": REQUIRED,
        "model": REQUIRED,
        "t": REQUIRED,
        "oracle": REQUIRED,
        "cutoff": None,
        "tail_tol": DEFAULT_TAIL_TOL,
        "output": None,
    }
    resolved = _fields(cfg, spec, "")
    kind = resolved["model_type"]
    if kind not in ("rwa", "critical"):
        raise ConfigInvalid("model_type must be 'rwa' or 'critical'")
    fields, model = _model(resolved["model"], kind)
    t = _number(resolved["t"], "t")
    if t < 0:
        raise ConfigInvalid("t must be non-negative")
    oracle = resolved["oracle"]
    if oracle not in ("fock", "lyapunov"):
        raise ConfigInvalid("oracle must be 'fock' or 'lyapunov'")
    if oracle == "lyapunov" and kind != "rwa":
        raise ConfigInvalid("the lyapunov oracle covers the rwa model only")
    cutoff = resolved["cutoff"]
    if cutoff is not None:
        cutoff = _integer(cutoff, "cutoff", 2)
    tail_tol = _number(resolved["tail_tol"], "tail_tol")
    if tail_tol <= 0:
        raise ConfigInvalid("tail_tol must be positive")
    resolved.update(model=fields, t=t, cutoff=cutoff, tail_tol=tail_tol)

    report = {"config": resolved, "oracle": oracle}
    if oracle == "fock":
        run = _guard("fock_evolve", fock_run, FockConfig(model, cutoff, tail_tol=tail_tol), t)
        if kind == "rwa":
            closed = _guard("evolve_cavity", evolve_cavity, model, t)[0]
            joint = None if model.displaced else joint_evolve_noiseless(model, t)
        else:
            closed = _guard("gamma_c_closed", gamma_c_closed, model, t)
            joint = joint_evolve_critical(model, t)
        diff = float(np.abs(run.state.gamma[:2, :2] - closed.gamma).max())
        diff = max(diff, float(np.abs(run.state.d[:2] - closed.d).max()))
        if joint is not None:
            diff = max(diff, float(np.abs(run.state.gamma - joint.gamma).max()))
        report.update(cutoff_used=run.cutoff, tail=run.tail, norm_drift=run.norm_drift, threshold=FOCK_THRESHOLD)
        threshold = FOCK_THRESHOLD
    else:
        state = _guard("lyapunov_integrate", lyapunov_integrate, model, t)
        closed = _guard("evolve_cavity", evolve_cavity, model, t)[0]
        scale = max(1.0, float(np.abs(closed.gamma).max()))
        diff = float(np.abs(state.gamma[:2, :2] - closed.gamma).max()) / scale
        threshold = LYAPUNOV_THRESHOLD
        if model.kappa == 0 and not model.displaced:
            joint = joint_evolve_noiseless(model, t)
            jscale = max(1.0, float(np.abs(joint.gamma).max()))
            report["joint_relative_discrepancy"] = float(np.abs(state.gamma - joint.gamma).max()) / jscale
        report.update(threshold=threshold, relative=True)
    report["max_discrepancy"] = diff
    report["passed"] = diff < threshold
    out = _output(resolved, required=False)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def _load(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigInvalid(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigInvalid(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    return cfg


def _print_oracle(report: dict) -> int:
    print(f"oracle {report['oracle']}: max discrepancy {report['max_discrepancy']:.3e} (threshold {report['threshold']:.0e})")
    if "joint_relative_discrepancy" in report:
        print(f"lyapunov vs symplectic propagator: {report['joint_relative_discrepancy']:.3e}")
    if not report["passed"]:
        print("oracle check failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args.config)
    mode = cfg.get("mode")
    if mode == "rwa":
        _run_series(cfg, "rwa", args.threads)
    elif mode == "critical":
        _run_series(cfg, "critical", args.threads)
    elif mode == "sweep-hl":
        _run_sweep_hl(cfg, args.threads)
    elif mode == "sweep-critical":
        _run_sweep_critical(cfg, args.threads)
    elif mode == "nu-check":
        _run_nu_check(cfg, args.threads)
    elif mode == "oracle-check":
        return _print_oracle(oracle_check(cfg))
    else:
        raise ConfigInvalid(f"mode must be one of rwa, critical, sweep-hl, sweep-critical, nu-check, oracle-check; got {mode!r}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    cfg = _load(args.config)
    if cfg.get("mode", "oracle-check") != "oracle-check":
        raise ConfigInvalid("oracle-check expects mode 'oracle-check'")
    return _print_oracle(oracle_check(cfg))


def cmd_fit(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as err:
        raise ConfigInvalid(f"cannot read {args.csv}: {err}") from err
    if rows and (args.x not in rows[0] or args.y not in rows[0]):
        raise ConfigInvalid(f"columns {args.x!r} and {args.y!r} must both exist in {args.csv}")
    try:
        pts = [(float(r[args.x]), float(r[args.y])) for r in rows]
    except ValueError as err:
        raise ConfigInvalid(f"non-numeric entry in {args.csv}: {err}") from err
    fit = _guard("loglog_fit", loglog_fit, pts)
    print(json.dumps(asdict(fit) | {"flagged": fit.flagged}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    threads_help = "worker threads for sweeps (0 = one per CPU)"
    # accepted before or after the subcommand; SUPPRESS keeps the subcommand
    # from overwriting a value given at the top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, metavar="N", help=threads_help)
    parser = argparse.ArgumentParser(
        prog="magnon-metrology",
        description="Gaussian-state metrology of a cavity-magnon system.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--threads", type=int, default=None, metavar="N", help=threads_help)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run an experiment config", epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("oracle-check", parents=[common], help="compare a closed form with its oracle")
    p.add_argument("config")
    p.set_defaults(func=cmd_oracle_check)
    p = sub.add_parser("fit", parents=[common], help="log-log fit of two CSV columns")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigInvalid as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
