"""Cavity-magnon dynamics under the rotating-wave (beam-splitter) coupling.

The magnon starts in a squeezed vacuum with squeezing r0 along x and the
cavity in vacuum. The cavity state at time t follows from a lossless
beam-splitter step (transfer fraction xi) composed with thermal mixing
(survival fraction eta = exp(-kappa t)).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidModel, UnsupportedNoise, ZeroCoupling
from .fisher import FisherResult, ParamDerivatives, fd_stencil, fisher
from .gaussian import (
    DEGENERATE_SINH,
    GaussianState,
    StandardForm,
    entanglement_entropy,
    reduce,
    to_standard_form,
    wrap_phase,
)


class RwaValidityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class RwaModel:
    """Physical parameters. The magnon frequency is omega_m = B0 + B (mu = 1).

    A single ``kappa`` and ``n_noise`` serve both modes, so the equal-rate
    assumption behind the closed forms holds by construction.
    """

    omega_c: float
    B0: float
    g: float
    B: float = 0.0
    B_x: float = 0.0
    B_y: float = 0.0
    kappa: float = 0.0
    n_noise: float = 0.0
    r0: float = 0.0

    def __post_init__(self):
        for name in ("omega_c", "B0", "g", "B", "B_x", "B_y", "kappa", "n_noise", "r0"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidModel(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.omega_c <= 0:
            raise InvalidModel(f"omega_c must be positive, got {self.omega_c}")
        if self.omega_m <= 0:
            raise InvalidModel(f"omega_m = B0 + B must be positive, got {self.omega_m}")
        for name in ("g", "kappa", "n_noise", "r0"):
            if getattr(self, name) < 0:
                raise InvalidModel(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.g >= 0.5 * math.sqrt(self.omega_c * self.omega_m):
            warnings.warn(
                f"g = {self.g} is outside the rotating-wave regime g < sqrt(omega_c omega_m)/2",
                RwaValidityWarning,
                stacklevel=3,
            )

    @property
    def omega_m(self) -> float:
        return self.B0 + self.B

    @property
    def displaced(self) -> bool:
        return self.B_x != 0.0 or self.B_y != 0.0


@dataclass(frozen=True)
class EvolutionFactors:
    delta: float
    xi: float
    eta: float
    lambda_plus: complex
    lambda_minus: complex


def _sinc(x: float) -> float:
    return 1.0 if abs(x) < 1e-8 else math.sin(x) / x


def evolution_factors(m: RwaModel, t: float) -> EvolutionFactors:
    delta = math.hypot(2.0 * m.g, m.omega_c - m.omega_m)
    xi = min((m.g * t * _sinc(0.5 * delta * t)) ** 2, 1.0)
    eta = math.exp(-m.kappa * t)
    base = -0.5 * m.kappa + 0.5j * (-m.omega_c - m.omega_m)
    return EvolutionFactors(delta, xi, eta, base + 0.5j * delta, base - 0.5j * delta)


def _check_time(t: float):
    if not t >= 0:
        raise InvalidModel(f"time must be non-negative, got {t}")


def displacement_nonparallel(m: RwaModel, t: float) -> complex:
    """Cavity amplitude <c>(t) driven by the transverse field (B_x, B_y)."""
    _check_time(t)
    if not m.displaced or m.g == 0.0:
        return 0j
    f = evolution_factors(m, t)
    # [(e^{l- t} - 1)/l- - (e^{l+ t} - 1)/l+] / Delta, regular as Delta -> 0
    base = 0.5 * (f.lambda_plus + f.lambda_minus)
    theta = 0.5 * f.delta * t
    decay = cmath.exp(base * t)
    ratio = 1j * (decay * math.cos(theta) - 1.0 - base * decay * t * _sinc(theta))
    ratio /= f.lambda_plus * f.lambda_minus
    return 0.5j * m.g * complex(m.B_x, m.B_y) * ratio


def _gamma_in(r0: float, xi: float, phase: float) -> np.ndarray:
    s2, c2 = math.sin(phase) ** 2, math.cos(phase) ** 2
    up, down = math.expm1(2 * r0), math.expm1(-2 * r0)
    g11 = 1.0 + xi * (down * s2 + up * c2)
    g22 = 1.0 + xi * (up * s2 + down * c2)
    g12 = -math.sinh(2 * r0) * xi * math.sin(2 * phase)
    return np.array([[g11, g12], [g12, g22]])


def _closed_standard_form(m: RwaModel, f: EvolutionFactors, t: float, alpha: complex) -> StandardForm:
    xi, eta, r0 = f.xi, f.eta, m.r0
    x = 4.0 * xi * (1.0 - xi) * math.sinh(r0) ** 2
    root_in = math.sqrt(1.0 + x)
    n_in = x / (2.0 * (root_in + 1.0))
    r_in = 0.5 * (math.log1p(xi * math.expm1(2 * r0)) - 0.5 * math.log1p(x))
    a = 1.0 + 2.0 * n_in
    mix = -math.expm1(-m.kappa * t)
    c = mix * (1.0 + 2.0 * m.n_noise)
    # u = eta a + c - 1 written without cancellation
    u = 2.0 * eta * n_in + 2.0 * mix * m.n_noise
    sq2_minus_1 = u * (u + 2.0) + 4.0 * eta * a * c * math.sinh(r_in) ** 2
    sq = math.sqrt(1.0 + sq2_minus_1)
    n_th = sq2_minus_1 / (2.0 * (sq + 1.0))
    r = 0.5 * math.log((c + eta * a * math.exp(2 * r_in)) / sq)
    r = max(r, 0.0)
    phi = 0.0 if math.sinh(2 * r) < DEGENERATE_SINH else wrap_phase(math.pi - (m.omega_c + m.omega_m) * t)
    return StandardForm(alpha, r, phi, n_th)


def evolve_cavity(m: RwaModel, t: float) -> tuple[GaussianState, StandardForm]:
    """Reduced cavity state at time t as a matrix and in closed standard form."""
    _check_time(t)
    f = evolution_factors(m, t)
    phase = 0.5 * (m.omega_c + m.omega_m) * t
    gamma = f.eta * _gamma_in(m.r0, f.xi, phase) + (1.0 - f.eta) * (2 * m.n_noise + 1) * np.eye(2)
    alpha = displacement_nonparallel(m, t)
    d = math.sqrt(2.0) * np.array([alpha.real, alpha.imag])
    return GaussianState(d, gamma), _closed_standard_form(m, f, t, alpha)


def _mode_propagator(m: RwaModel, t: float) -> np.ndarray:
    """2x2 complex matrix U = exp(-i H t) with (c, b)(t) = U (c, b)(0), lossless."""
    f = evolution_factors(m, t)
    half = 0.5 * f.delta * t
    traceless = np.array([[0.5 * (m.omega_c - m.omega_m), m.g], [m.g, 0.5 * (m.omega_m - m.omega_c)]])
    # traceless^2 = (Delta/2)^2, so the exponential is a cosine plus a sinc term
    u = math.cos(half) * np.eye(2) - 1j * t * _sinc(half) * traceless
    return cmath.exp(-0.5j * (m.omega_c + m.omega_m) * t) * u


def passive_symplectic(u: np.ndarray) -> np.ndarray:
    """Real quadrature matrix of the linear mode map a -> u a."""
    n = u.shape[0]
    out = np.zeros((2 * n, 2 * n))
    for j in range(n):
        for k in range(n):
            re, im = u[j, k].real, u[j, k].imag
            out[2 * j : 2 * j + 2, 2 * k : 2 * k + 2] = [[re, -im], [im, re]]
    return out


def joint_evolve_noiseless(m: RwaModel, t: float) -> GaussianState:
    _check_time(t)
    if m.kappa > 0:
        raise UnsupportedNoise("closed-form joint evolution is lossless; use oracles.lyapunov_integrate")
    if m.displaced:
        raise InvalidModel("joint evolution assumes B_x = B_y = 0")
    mat = passive_symplectic(_mode_propagator(m, t))
    g0 = np.diag([1.0, 1.0, math.exp(-2 * m.r0), math.exp(2 * m.r0)])
    return GaussianState(np.zeros(4), mat @ g0 @ mat.T)


def entanglement_vs_time(m: RwaModel, t_grid) -> list[tuple[float, float]]:
    out = []
    for t in t_grid:
        sf = to_standard_form(reduce(joint_evolve_noiseless(m, float(t)), 0))
        out.append((float(t), entanglement_entropy(sf.n_th)))
    return out


def t_star(m: RwaModel) -> float:
    if m.g == 0.0:
        raise ZeroCoupling("t* = pi/(2g) is undefined without coupling")
    return math.pi / (2.0 * m.g)


def cavity_family(m: RwaModel, t: float):
    """B -> closed-form cavity StandardForm at fixed time t."""

    def family(B: float) -> StandardForm:
        return evolve_cavity(replace(m, B=B), t)[1]

    return family


def cavity_fisher(
    m: RwaModel, t: float, step: float | None = None
) -> tuple[StandardForm, ParamDerivatives, FisherResult]:
    """Fisher information about B carried by the cavity at time t."""
    p, dp = fd_stencil(cavity_family(m, t), m.B, step)
    return p, dp, fisher(p, dp)
