"""Parameter sweeps, peak location and power-law fits."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .critical import CriticalModel, critical_fisher, t_star_critical
from .errors import FlatFunction, InvalidParameter, NonPositiveData, TooFewPoints
from .fisher import fd_stencil, qfi
from .gaussian import StandardForm, entanglement_entropy, photon_number
from .rwa import RwaModel, cavity_fisher, t_star

MIN_R_SQUARED = 0.99


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    @property
    def flagged(self) -> bool:
        """True when the fit is too poor to quote an exponent from."""
        return self.r_squared < MIN_R_SQUARED


@dataclass(frozen=True)
class SweepRecord:
    inputs: Mapping[str, float]
    t: float
    F_Q: float
    F_C: float
    S: float
    n_th: float
    r: float
    phi: float
    N_c: float
    clamped: bool = False


def loglog_fit(points: Iterable[tuple[float, float]]) -> FitResult:
    """Least-squares line through (log x, log y)."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(pts)}")
    if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
        raise NonPositiveData("log-log fit needs finite, strictly positive x and y")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise TooFewPoints("all x values coincide")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return FitResult(float(slope), float(intercept), r2, len(pts))


def peak_find(f: Callable[[float], float], window: tuple[float, float], grid_n: int = 64) -> tuple[float, float]:
    """Maximise ``f`` on ``window``: coarse scan, then Brent refinement.

    The refinement (parabolic interpolation with golden-section safeguards)
    runs inside the bracket formed by the best grid point's neighbours.
    """
    lo, hi = map(float, window)
    if not lo < hi:
        raise InvalidParameter(f"window must satisfy t_lo < t_hi, got {window}")
    if grid_n < 16:
        raise InvalidParameter(f"grid_n must be at least 16, got {grid_n}")
    grid = np.linspace(lo, hi, grid_n)
    vals = np.array([f(x) for x in grid])
    top, bottom = vals.max(), vals.min()
    if top - bottom <= 1e-12 * max(abs(top), abs(bottom)):
        raise FlatFunction(f"f varies by less than 1e-12 relative on {window}")
    i = int(np.argmax(vals))
    if i in (0, grid_n - 1):
        return float(grid[i]), float(vals[i])
    xtol = (hi - lo) / grid_n**2 * 1e-3
    res = minimize_scalar(lambda x: -f(x), bounds=(grid[i - 1], grid[i + 1]), method="bounded", options={"xatol": xtol})
    if -res.fun >= vals[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(vals[i])


def pmap(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    """Order-preserving map; ``threads`` 0 means one worker per CPU."""
    if threads == 0:
        threads = os.cpu_count() or 1
    if not threads or threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _record(inputs, t, p: StandardForm, f_q: float, f_c: float) -> SweepRecord:
    return SweepRecord(
        inputs=dict(inputs),
        t=float(t),
        F_Q=f_q,
        F_C=f_c,
        S=entanglement_entropy(p.n_th),
        n_th=p.n_th,
        r=p.r,
        phi=p.phi,
        N_c=photon_number(p),
        clamped=p.clamped,
    )


def rwa_record(m: RwaModel, t: float, inputs: Mapping[str, float] | None = None) -> SweepRecord:
    p, _, fi = cavity_fisher(m, t)
    return _record(inputs or {"t": t}, t, p, fi.f_q, fi.f_c)


def critical_record(m: CriticalModel, t: float, inputs: Mapping[str, float] | None = None) -> SweepRecord:
    res = critical_fisher(m, t)
    return _record(inputs or {"t": t}, t, res.state, res.fisher.f_q, res.fisher.f_c)


def time_series(model, times: Sequence[float], threads: int | None = None) -> list[SweepRecord]:
    """One record per time for an RWA or critical model."""
    rec = rwa_record if isinstance(model, RwaModel) else critical_record
    return pmap(lambda t: rec(model, float(t)), list(times), threads)


def _fit_records(records: Sequence[SweepRecord], x: Callable, y: Callable) -> FitResult:
    return loglog_fit((x(rec), y(rec)) for rec in records if not rec.clamped)


def hl_sweep(
    base: RwaModel,
    r0_grid: Sequence[float],
    timing: str = "t_star",
    window: tuple[float, float] = (0.5, 1.5),
    grid_n: int = 64,
    threads: int | None = None,
) -> tuple[FitResult, list[SweepRecord]]:
    """F_C against N_c for each initial squeezing r0.

    ``timing`` is "t_star" (read out at pi/(2g)) or "peak" (read out at the
    maximum of F_C/t^2 inside ``window``, given in units of t*).
    """
    grid = [float(r) for r in r0_grid]
    if len(grid) < 8 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameter("r0_grid needs at least 8 strictly increasing values")
    if timing not in ("t_star", "peak"):
        raise InvalidParameter(f"timing must be 't_star' or 'peak', got {timing!r}")
    ts = t_star(base)

    def one(r0: float) -> SweepRecord:
        m = replace(base, r0=r0)
        t = ts
        if timing == "peak":
            t, _ = peak_find(lambda x: cavity_fisher(m, x)[2].f_c / x**2, (window[0] * ts, window[1] * ts), grid_n)
        return rwa_record(m, t, {"r0": r0, "t": t})

    records = pmap(one, grid, threads)
    return _fit_records(records, lambda q: q.N_c, lambda q: q.F_C), records


def snl_hl_experiment(base: RwaModel, r0_grid: Sequence[float], timing: str = "t_star", **kw) -> FitResult:
    return hl_sweep(base, r0_grid, timing, **kw)[0]


def displacement_sweep(
    base: RwaModel, bx_grid: Sequence[float], t: float | None = None, threads: int | None = None
) -> tuple[FitResult, list[SweepRecord]]:
    """QFI about B carried by the transverse-field displacement alone (r0 = 0)."""
    model = replace(base, r0=0.0, B_y=0.0)
    when = t_star(model) if t is None else t

    def one(bx: float) -> SweepRecord:
        return rwa_record(replace(model, B_x=float(bx)), when, {"B_x": float(bx), "t": when})

    records = pmap(one, list(bx_grid), threads)
    return _fit_records(records, lambda q: q.N_c, lambda q: q.F_Q), records


def critical_sweep(
    omega_c: float,
    omega_m: float,
    gap_fractions: Sequence[float],
    fractions: Sequence[float] = (1.0, 0.25),
    n: int = 1,
    threads: int | None = None,
) -> list[SweepRecord]:
    """Fisher information at t*·fraction for g = g_c (1 - gap) over the gaps.

    Records are grouped by fraction, in the order given.
    """
    gc = 0.5 * math.sqrt(omega_c * omega_m)
    jobs = [(f, e) for f in fractions for e in gap_fractions]

    def one(job) -> SweepRecord:
        frac, e = job
        m = CriticalModel(omega_c, omega_m, gc * (1.0 - e))
        ts = t_star_critical(m, n)
        inputs = {"g": m.g, "gc_minus_g": m.g_c - m.g, "t_star": ts, "fraction": float(frac)}
        return critical_record(m, ts * frac, inputs)

    return pmap(one, jobs, threads)


@dataclass(frozen=True)
class CriticalScaling:
    fraction: float
    raw: FitResult
    rescaled: FitResult


def critical_scaling(records: Sequence[SweepRecord]) -> list[CriticalScaling]:
    """Exponents of F_C and of F_C/t*^2 against (g_c - g), one per time fraction."""
    out = []
    for frac in dict.fromkeys(rec.inputs["fraction"] for rec in records):
        group = [rec for rec in records if rec.inputs["fraction"] == frac]
        gap = lambda q: q.inputs["gc_minus_g"]  # noqa: E731
        raw = _fit_records(group, gap, lambda q: q.F_C)
        scaled = _fit_records(group, gap, lambda q: q.F_C / q.inputs["t_star"] ** 2)
        out.append(CriticalScaling(frac, raw, scaled))
    return out


def nu_family(nu: float) -> Callable[[float], StandardForm]:
    """Undisplaced family with r = B, phi = B and n_th = exp(nu r)."""
    return lambda B: StandardForm(0j, B, B, math.exp(nu * B))


def nu_scaling_check(nu: float, r_grid: Sequence[float]) -> FitResult:
    """Fit F_Q against N_c along the synthetic family; expect 4/(2 + nu)."""
    if nu < 0:
        raise InvalidParameter(f"nu must be non-negative, got {nu}")
    family = nu_family(nu)
    pts = []
    for r in r_grid:
        p, dp = fd_stencil(family, float(r))
        pts.append((photon_number(p), qfi(p, dp)))
    n_c = [x for x, _ in pts]
    if len(n_c) < 3 or math.log10(max(n_c) / min(n_c)) < 1.5:
        raise InvalidParameter("r_grid must span at least 1.5 decades of N_c")
    return loglog_fit(pts)
