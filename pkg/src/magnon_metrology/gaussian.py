"""Gaussian states of one or two bosonic modes.

Quadratures are ordered (X1, P1, X2, P2) with x = (a + a^dag)/sqrt(2), so the
vacuum covariance is the identity and alpha = <a> = (d1 + i d2)/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, NonPhysicalState, WrongModeCount

PHYSICALITY_TOL = 1e-9
# Below this sinh(2r) the squeezing axis is undefined and phi is pinned to 0.
DEGENERATE_SINH = 1e-12
# Clamps smaller than this are floating-point noise and are not flagged.
CLAMP_FLAG_TOL = 1e-12


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianState:
    """Displacement vector ``d`` and covariance ``gamma`` of a Gaussian state."""

    d: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).reshape(-1)
        g = np.asarray(self.gamma, dtype=float)
        if d.size not in (2, 4) or g.shape != (d.size, d.size):
            raise WrongModeCount(
                f"expected 1 or 2 modes, got d of length {d.size} and gamma of shape {g.shape}"
            )
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(g))):
            raise InvalidParameter("state contains non-finite entries")
        asym = np.abs(g - g.T)
        if np.any(asym > 1e-12 * np.maximum(1.0, np.abs(g))):
            raise InvalidParameter(f"covariance not symmetric (max asymmetry {asym.max():.3g})")
        object.__setattr__(self, "d", _frozen(d))
        object.__setattr__(self, "gamma", _frozen(0.5 * (g + g.T)))

    @property
    def n_modes(self) -> int:
        return self.d.size // 2

    @classmethod
    def vacuum(cls, n_modes: int = 1) -> GaussianState:
        return cls(np.zeros(2 * n_modes), np.eye(2 * n_modes))

    def symplectic_eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvals(1j * symplectic_form(self.n_modes) @ self.gamma)
        return np.sort(np.abs(ev.real))[::2]

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return bool(np.all(self.symplectic_eigenvalues() >= 1.0 - tol))


@dataclass(frozen=True)
class StandardForm:
    """Displaced squeezed thermal parameters (alpha, r, phi, n_th).

    ``clamped`` records that n_th was lifted from a slightly negative value
    by more than roundoff; sweeps use it to drop edge-of-validity points.
    """

    alpha: complex
    r: float
    phi: float
    n_th: float
    clamped: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        for name in ("r", "phi", "n_th"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(math.isfinite(v) for v in (self.alpha.real, self.alpha.imag, self.r, self.phi, self.n_th)):
            raise InvalidParameter("standard-form parameters must be finite")


def wrap_phase(phi: float) -> float:
    """Map an angle onto (-pi, pi]."""
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w == -math.pi else w


def _require_single(state: GaussianState):
    if state.n_modes != 1:
        raise WrongModeCount(f"expected a single-mode state, got {state.n_modes} modes")


def to_standard_form(state: GaussianState) -> StandardForm:
    _require_single(state)
    (g11, g12), (_, g22) = state.gamma
    det = g11 * g22 - g12 * g12
    if not det >= 1.0 - PHYSICALITY_TOL:
        raise NonPhysicalState(f"det(gamma) = {det!r} is below 1")
    root = math.sqrt(det)
    clamped = False
    if root < 1.0:
        clamped = 1.0 - root > CLAMP_FLAG_TOL
        root = 1.0
    n_th = 0.5 * (root - 1.0)
    # sinh(2r) from the anisotropy; better conditioned than arcosh near r = 0
    sinh2r = math.hypot(g11 - g22, 2.0 * g12) / (2.0 * root)
    r = 0.5 * math.asinh(sinh2r)
    phi = 0.0 if sinh2r < DEGENERATE_SINH else wrap_phase(math.atan2(-2.0 * g12, g22 - g11))
    alpha = complex(state.d[0], state.d[1]) / math.sqrt(2.0)
    return StandardForm(alpha, r, phi, n_th, clamped=clamped)


def from_standard_form(p: StandardForm) -> GaussianState:
    if p.r < 0 or p.n_th < 0:
        raise InvalidParameter(f"r and n_th must be non-negative, got r={p.r}, n_th={p.n_th}")
    k = 2.0 * p.n_th + 1.0
    c, s = math.cosh(2 * p.r), math.sinh(2 * p.r)
    gamma = k * np.array(
        [
            [c - s * math.cos(p.phi), -s * math.sin(p.phi)],
            [-s * math.sin(p.phi), c + s * math.cos(p.phi)],
        ]
    )
    d = math.sqrt(2.0) * np.array([p.alpha.real, p.alpha.imag])
    return GaussianState(d, gamma)


def photon_number(p: StandardForm) -> float:
    """Mean excitation number |alpha|^2 + n_th + (2 n_th + 1) sinh^2 r."""
    return abs(p.alpha) ** 2 + p.n_th + (2 * p.n_th + 1) * math.sinh(p.r) ** 2


def entanglement_entropy(n_th: float) -> float:
    """Von Neumann entropy in bits of a thermal mode with occupation n_th."""
    if n_th < 0:
        if n_th < -PHYSICALITY_TOL:
            raise InvalidParameter(f"n_th must be non-negative, got {n_th}")
        n_th = 0.0
    if n_th == 0.0:
        return 0.0
    return math.log2(n_th + 1) + n_th * math.log2((n_th + 1) / n_th)


def reduce(state: GaussianState, keep: int) -> GaussianState:
    """Partial trace: keep mode 0 (cavity) or 1 (magnon) of a two-mode state."""
    if state.n_modes != 2:
        raise WrongModeCount(f"expected a two-mode state, got {state.n_modes} modes")
    if keep not in (0, 1):
        raise InvalidParameter(f"mode index must be 0 or 1, got {keep}")
    sl = slice(2 * keep, 2 * keep + 2)
    return GaussianState(state.d[sl], state.gamma[sl, sl])
