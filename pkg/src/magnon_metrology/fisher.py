"""Quantum and classical Fisher information of single-mode Gaussian families."""

from __future__ import annotations

import cmath
import math
import sys
from dataclasses import dataclass
from typing import Callable

from .errors import DisplacementNotSupported, InvalidParameter, SingularPureState, StepTooSmall
from .gaussian import StandardForm, wrap_phase

PURE_NTH = 1e-12
PURE_DNTH = 1e-6
ZERO_ALPHA = 1e-12
# phi' is meaningless when the state is (numerically) unsqueezed
MIN_R_FOR_PHASE = 1e-8
RICHARDSON_RTOL = 1e-4
RICHARDSON_ATOL = 1e-10


@dataclass(frozen=True)
class ParamDerivatives:
    d_alpha: complex = 0j
    d_r: float = 0.0
    d_phi: float = 0.0
    d_nth: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "d_alpha", complex(self.d_alpha))
        for name in ("d_r", "d_phi", "d_nth"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = (self.d_alpha.real, self.d_alpha.imag, self.d_r, self.d_phi, self.d_nth)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameter(f"derivatives must be finite, got {self}")

    def scaled(self, c: float) -> ParamDerivatives:
        return ParamDerivatives(c * self.d_alpha, c * self.d_r, c * self.d_phi, c * self.d_nth)


@dataclass(frozen=True)
class FisherResult:
    """F_Q and F_C in units of B^-2. ``f_c`` is NaN when a displacement is present."""

    f_q: float
    f_c: float


def _thermal_term(n: float, dn: float) -> float:
    if n < PURE_NTH:
        if abs(dn) >= PURE_DNTH:
            raise SingularPureState(
                f"n_th = {n:.3g} is pure but dn_th/dB = {dn:.3g}; the thermal term diverges"
            )
        return 0.0
    return dn * dn / (n * (1.0 + n))


def qfi(p: StandardForm, dp: ParamDerivatives) -> float:
    n, r = p.n_th, p.r
    k = 2.0 * n + 1.0
    da = dp.d_alpha
    displacement = (4.0 / k) * (
        abs(da) ** 2 * math.cosh(2 * r)
        + (da.conjugate() ** 2 * cmath.exp(1j * p.phi)).real * math.sinh(2 * r)
    )
    squeezing = k * k / (2.0 * (1.0 + 2.0 * n + 2.0 * n * n)) * (
        (math.sinh(2 * r) * dp.d_phi) ** 2 + 4.0 * dp.d_r**2
    )
    return displacement + _thermal_term(n, dp.d_nth) + squeezing


def _require_undisplaced(p: StandardForm, dp: ParamDerivatives):
    if abs(p.alpha) > ZERO_ALPHA or abs(dp.d_alpha) > ZERO_ALPHA:
        raise DisplacementNotSupported("classical Fisher information is defined for zero displacement only")


def cfi_optimal(p: StandardForm, dp: ParamDerivatives) -> float:
    """CFI of the Gaussian measurement matched to the state (psi = phi, s = r)."""
    _require_undisplaced(p, dp)
    n, r = p.n_th, p.r
    k = 2.0 * n + 1.0
    dn, dr = dp.d_nth, dp.d_r
    denom = (n + 1.0) ** 2
    return ((dn - k * dr) ** 2 + (dn + k * dr) ** 2) / (2.0 * denom) + (
        k * math.sinh(2 * r) * dp.d_phi
    ) ** 2 / (4.0 * denom)


def cfi_general(p: StandardForm, dp: ParamDerivatives, psi: float, s: float) -> float:
    """CFI of a Gaussian measurement with squeezing s along phase psi.

    Built from the Pauli components of Gamma = gamma + gamma_meas and of the
    derivative Sigma = d gamma / dB.
    """
    _require_undisplaced(p, dp)
    if s < 0:
        raise InvalidParameter(f"measurement squeezing s must be non-negative, got {s}")
    n, r = p.n_th, p.r
    k = 2.0 * n + 1.0
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    gx = math.sinh(2 * s) * math.sin(p.phi - psi)
    gz = -(k * sh + math.cos(p.phi - psi) * math.sinh(2 * s))
    g0 = k * ch + math.cosh(2 * s)
    sx = -k * dp.d_phi * sh
    sz = -2.0 * (dp.d_nth * sh + k * dp.d_r * ch)
    s0 = 2.0 * (dp.d_nth * ch + k * dp.d_r * sh)
    num = (
        (gx * sx + gz * sz - g0 * s0) ** 2
        + (gx * s0 - g0 * sx) ** 2
        + (gz * s0 - g0 * sz) ** 2
        - (gz * sx - gx * sz) ** 2
    )
    return num / (gx * gx + gz * gz - g0 * g0) ** 2


def default_step(at_B: float) -> float:
    return 1e-5 * max(1.0, abs(at_B))


def _richardson(fm2, fm1, fp1, fp2, h, scale, what):
    near, far = fp1 - fm1, fp2 - fm2
    d3 = near / (2 * h)
    d5 = (8 * near - far) / (12 * h)
    tol = RICHARDSON_RTOL * max(abs(d3), abs(d5)) + RICHARDSON_ATOL * scale
    if abs(d5 - d3) > tol:
        raise StepTooSmall(
            f"d{what}/dB estimates {d3!r} and {d5!r} disagree at step {h!r}"
        )
    # one-ulp errors in the samples, weighted by the five-point coefficients
    roundoff = 1.5 * sys.float_info.epsilon * scale / h
    if (near or far) and roundoff > tol:
        raise StepTooSmall(f"step {h!r} lets roundoff ({roundoff:.3g}) swamp d{what}/dB = {d5!r}")
    return d5


def fd_stencil(
    family: Callable[[float], StandardForm], at_B: float, step: float | None = None
) -> tuple[StandardForm, ParamDerivatives]:
    """Evaluate ``family`` at ``at_B`` and differentiate it there.

    Returns the central StandardForm together with the derivatives, so callers
    that need both avoid an extra evaluation.
    """
    h = default_step(at_B) if step is None else float(step)
    if not h > 0:
        raise InvalidParameter(f"step must be positive, got {step}")
    centre = family(at_B)
    pts = [family(at_B + k * h) for k in (-2, -1, 1, 2)]

    def deriv(get, what):
        vals = [get(q) for q in pts]
        scale = max(1.0, abs(get(centre)), *(abs(v) for v in vals))
        return _richardson(*vals, h, scale, what)

    d_alpha = deriv(lambda q: q.alpha, "alpha")
    d_r = deriv(lambda q: q.r, "r")
    d_nth = deriv(lambda q: q.n_th, "n_th")
    if centre.r < MIN_R_FOR_PHASE:
        d_phi = 0.0
    else:
        offsets = [wrap_phase(q.phi - centre.phi) for q in pts]
        d_phi = _richardson(*offsets, h, max(1.0, abs(centre.phi)), "phi")
    return centre, ParamDerivatives(d_alpha, d_r, d_phi, d_nth)


def derivatives_fd(
    family: Callable[[float], StandardForm], at_B: float, step: float | None = None
) -> ParamDerivatives:
    """Five-point central differences of a standard-form family in B.

    The phase is differenced through its principal-branch offsets from the
    central value, so branch cuts never leak 2 pi / step into phi'.
    """
    return fd_stencil(family, at_B, step)[1]


def fisher(p: StandardForm, dp: ParamDerivatives) -> FisherResult:
    """QFI plus the matched-measurement CFI (NaN if the state is displaced)."""
    f_q = qfi(p, dp)
    try:
        f_c = cfi_optimal(p, dp)
    except DisplacementNotSupported:
        f_c = math.nan
    return FisherResult(f_q, f_c)
