"""Beyond-RWA dynamics near the normal-to-superradiant critical point.

H = omega_c c^dag c + omega_m b^dag b + g (c + c^dag)(b + b^dag), starting
from the joint vacuum, diagonalised into Bogoliubov branches eps_- <= eps_+.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidModel, StepTooSmall, SuperradiantPhase
from .fisher import FisherResult, ParamDerivatives, fd_stencil, fisher
from .gaussian import GaussianState, StandardForm, to_standard_form

# fraction of (g_c - g) by which the probe step may move the critical point
PROBE_GAP_FRACTION = 1e-3
# target relative change of the covariance across one difference step
TARGET_GAMMA_CHANGE = 1e-3
STEP_RETRIES = 4


@dataclass(frozen=True)
class CriticalModel:
    omega_c: float
    omega_m: float
    g: float

    def __post_init__(self):
        for name in ("omega_c", "omega_m", "g"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidModel(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.omega_c <= 0 or self.omega_m <= 0:
            raise InvalidModel("omega_c and omega_m must be positive")
        if self.g < 0:
            raise InvalidModel(f"g must be non-negative, got {self.g}")
        if self.g >= self.g_c:
            raise SuperradiantPhase(f"g = {self.g} is not below g_c = {self.g_c}")

    @property
    def g_c(self) -> float:
        return 0.5 * math.sqrt(self.omega_c * self.omega_m)


@dataclass(frozen=True)
class BogoliubovData:
    eps_minus: float
    eps_plus: float
    delta_angle: float


def bogoliubov(m: CriticalModel) -> BogoliubovData:
    """Normal-mode energies and mixing angle.

    eps_-^2 is taken from eps_+^2 eps_-^2 = 4 omega_c omega_m (g_c - g)(g_c + g),
    which stays accurate as eps_- -> 0. The mixing angle uses atan2 so that the
    soft branch is always the one labelled eps_-, including omega_c > omega_m.
    """
    wc, wm, g = m.omega_c, m.omega_m, m.g
    if g >= m.g_c:
        raise SuperradiantPhase(f"g = {g} is not below g_c = {m.g_c}")
    s = math.sqrt((wc * wc - wm * wm) ** 2 + 16.0 * g * g * wc * wm)
    ep2 = 0.5 * (wc * wc + wm * wm + s)
    em2 = 4.0 * wc * wm * (m.g_c - g) * (m.g_c + g) / ep2
    delta = 0.5 * math.atan2(4.0 * g * math.sqrt(wc * wm), wm * wm - wc * wc)
    return BogoliubovData(math.sqrt(em2), math.sqrt(ep2), delta)


def gamma_c_closed(m: CriticalModel, t: float) -> GaussianState:
    """Cavity covariance at time t, entry by entry from the closed form."""
    if not t >= 0:
        raise InvalidModel(f"time must be non-negative, got {t}")
    if m.g == 0.0:
        # decoupled modes leave the vacuum untouched
        return GaussianState(np.zeros(2), np.eye(2))
    bd = bogoliubov(m)
    wc, wm = m.omega_c, m.omega_m
    em, ep = bd.eps_minus, bd.eps_plus
    c = math.cos(bd.delta_angle) ** 2
    a = c * (c - 1.0) * (wc - wm)
    cp, sp = math.cos(ep * t), math.sin(ep * t)
    cm, sm = math.cos(em * t), math.sin(em * t)
    c2p, s2p = math.cos(2 * ep * t) - 1.0, math.sin(2 * ep * t)
    c2m, s2m = math.cos(2 * em * t) - 1.0, math.sin(2 * em * t)

    g11 = (
        1.0
        + a * (2.0 / wm * (cp * cm - 1.0) - 2.0 * wc / (ep * em) * sp * sm)
        - (c - 1.0) * ((wc * wm + ep * ep) * (wc - wm) * c + (ep * ep - wc * wc) * wm) * c2p / (2.0 * ep * ep * wm)
        - c * ((wc * wm + em * em) * (wc - wm) * c + (wm * wm - em * em) * wc) * c2m / (2.0 * em * em * wm)
    )
    g22 = (
        1.0
        - a * (2.0 / wc * (cp * cm - 1.0) - 2.0 * ep * em / (wc * wc * wm) * sp * sm)
        + (c - 1.0) * ((wc - wm) * (wc * wm + ep * ep) * c + (ep * ep - wc * wc) * wm) * c2p / (2.0 * wc * wc * wm)
        + c * ((wc - wm) * (wc * wm + em * em) * c - (em * em - wm * wm) * wc) * c2m / (2.0 * wc * wc * wm)
    )
    g12 = (
        -a * ((ep * ep + wc * wm) / (ep * wc * wm) * sp * cm + (em * em + wc * wm) / (em * wc * wm) * cp * sm)
        + (c - 1.0) * (c * (wc - wm) * (ep * ep + wc * wm) + (ep * ep - wc * wc) * wm) * s2p / (2.0 * ep * wc * wm)
        + c * (c * (wc - wm) * (em * em + wc * wm) - (em * em - wm * wm) * wc) * s2m / (2.0 * em * wc * wm)
    )
    return GaussianState(np.zeros(2), np.array([[g11, g12], [g12, g22]]))


def t_star_critical(m: CriticalModel, n: int = 1) -> float:
    if int(n) != n or n < 1:
        raise InvalidModel(f"n must be a positive integer, got {n}")
    return n * math.pi / bogoliubov(m).eps_minus


def _ladder_to_quadrature() -> np.ndarray:
    block = np.array([[1.0, 1.0], [-1j, 1j]]) / math.sqrt(2.0)
    return np.kron(np.eye(2), block)


def _bogoliubov_matrix(m: CriticalModel, bd: BogoliubovData) -> np.ndarray:
    """(c, c^dag, b, b^dag) in terms of (c1, c1^dag, c2, c2^dag)."""
    wc, wm = m.omega_c, m.omega_m
    em, ep = bd.eps_minus, bd.eps_plus
    cd, sd = math.cos(bd.delta_angle), math.sin(bd.delta_angle)

    def pair(coef, w, e):
        k = coef / math.sqrt(w * e)
        return np.array([[k * (w + e), k * (w - e)], [k * (w - e), k * (w + e)]])

    return 0.5 * np.block(
        [
            [pair(cd, wc, em), pair(sd, wc, ep)],
            [pair(-sd, wm, em), pair(cd, wm, ep)],
        ]
    )


def joint_propagator_critical(m: CriticalModel, t: float) -> np.ndarray:
    """Real 4x4 quadrature map R(t) = M(t) R(0)."""
    bd = bogoliubov(m)
    t1 = _ladder_to_quadrature()
    t2 = _bogoliubov_matrix(m, bd)
    phases = np.exp(-1j * np.array([bd.eps_minus, -bd.eps_minus, bd.eps_plus, -bd.eps_plus]) * t)
    outer = t1 @ t2
    mat = outer @ np.diag(phases) @ np.linalg.inv(outer)
    return mat.real


def joint_evolve_critical(m: CriticalModel, t: float) -> GaussianState:
    if not t >= 0:
        raise InvalidModel(f"time must be non-negative, got {t}")
    mat = joint_propagator_critical(m, t)
    return GaussianState(np.zeros(4), mat @ mat.T)


def cavity_family(m: CriticalModel, t: float):
    """B -> cavity StandardForm at fixed t with omega_m shifted by B."""

    def family(B: float) -> StandardForm:
        return to_standard_form(gamma_c_closed(replace(m, omega_m=m.omega_m + B), t))

    return family


def _gamma_derivative(m: CriticalModel, t: float, h: float) -> np.ndarray:
    up = gamma_c_closed(replace(m, omega_m=m.omega_m + h), t).gamma
    down = gamma_c_closed(replace(m, omega_m=m.omega_m - h), t).gamma
    return (up - down) / (2 * h)


def adaptive_step(m: CriticalModel, t: float) -> float:
    """Difference step for d/d omega_m suited to the local stiffness.

    Near g_c the covariance varies on the scale of (g_c - g), and the
    standard-form parameters are strongly nonlinear in gamma, so the step is
    shrunk until one step moves gamma by about TARGET_GAMMA_CHANGE of its size.
    """
    gap = m.g_c - m.g
    h = 2.0 * PROBE_GAP_FRACTION * gap * m.omega_m / m.g_c
    gamma = gamma_c_closed(m, t).gamma
    slope = np.abs(_gamma_derivative(m, t, h)).max()
    if slope > 0:
        h = min(h, TARGET_GAMMA_CHANGE * max(1.0, np.abs(gamma).max()) / slope)
    return h


@dataclass(frozen=True)
class FisherAtTime:
    t: float
    state: StandardForm
    derivatives: ParamDerivatives
    fisher: FisherResult


def critical_fisher(m: CriticalModel, t: float, step: float | None = None) -> FisherAtTime:
    """Fisher information about B (inside omega_m) at the frozen time t.

    Without an explicit ``step`` the adaptive step is tried first and then
    quartered while the Richardson check still reports truncation error.
    """
    family = cavity_family(m, t)
    if step is not None:
        p, dp = fd_stencil(family, 0.0, step)
        return FisherAtTime(t, p, dp, fisher(p, dp))
    h = adaptive_step(m, t)
    for attempt in range(STEP_RETRIES + 1):
        try:
            p, dp = fd_stencil(family, 0.0, h)
            break
        except StepTooSmall:
            if attempt == STEP_RETRIES:
                raise
            h /= 4.0
    return FisherAtTime(t, p, dp, fisher(p, dp))


@dataclass(frozen=True)
class SpecialTimeFisher:
    t_star: FisherAtTime
    quarter: FisherAtTime


def fisher_at_special_times(m: CriticalModel, n: int = 1) -> SpecialTimeFisher:
    """F_Q and F_C at t* = n pi / eps_- and at t*/4.

    The times are fixed from the unperturbed model first; only the state is
    differentiated, not the time at which it is read out.
    """
    ts = t_star_critical(m, n)
    return SpecialTimeFisher(critical_fisher(m, ts), critical_fisher(m, ts / 4))
