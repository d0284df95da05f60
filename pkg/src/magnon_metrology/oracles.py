"""Brute-force reference engines, deliberately independent of the closed forms.

``fock_evolve`` diagonalises the Hamiltonian in a truncated two-mode number
basis. ``lyapunov_integrate`` integrates the second-moment equations implied
by the Langevin equations with thermal input noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln

from .critical import CriticalModel
from .errors import CutoffTooSmall, InvalidParameter, NonPhysicalState, UnsupportedNoise
from .gaussian import PHYSICALITY_TOL, GaussianState
from .rwa import RwaModel

DEFAULT_TAIL_TOL = 1e-10
UNITARITY_TOL = 1e-10
# number of top Fock levels per mode whose population counts as tail
EDGE_LEVELS = 2
AUTO_GROWTH_STEPS = 3


@dataclass(frozen=True)
class FockConfig:
    """Truncated-basis settings.

    ``cutoff`` is the highest number state kept per mode; None sizes it from
    the initial squeezing and enlarges it if the run breaches ``tail_tol``.
    ``dt`` is the spacing of the checkpoints at which tail population and
    norm are monitored; None uses 16 checkpoints per run.
    """

    model: RwaModel | CriticalModel
    cutoff: int | None = None
    dt: float | None = None
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.cutoff is not None and (int(self.cutoff) != self.cutoff or self.cutoff < 2):
            raise InvalidParameter(f"cutoff must be an integer >= 2, got {self.cutoff}")
        if self.dt is not None and not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}")
        if not self.tail_tol > 0:
            raise InvalidParameter(f"tail_tol must be positive, got {self.tail_tol}")


@dataclass(frozen=True)
class FockResult:
    state: GaussianState
    psi: np.ndarray = field(repr=False)
    cutoff: int
    tail: float
    norm_drift: float


def squeezed_vacuum_amplitudes(r: float, cutoff: int) -> tuple[np.ndarray, float]:
    """Number-basis amplitudes of exp(r (a^2 - a^dag^2)/2)|0> up to ``cutoff``.

    Returns the renormalised amplitudes and the probability that was cut off.
    """
    amps = np.zeros(cutoff + 1)
    if r == 0:
        amps[0] = 1.0
        return amps, 0.0
    k = np.arange(cutoff // 2 + 1)
    log_mag = (
        0.5 * gammaln(2 * k + 1)
        - k * math.log(2.0)
        - gammaln(k + 1)
        + k * math.log(math.tanh(r))
        - 0.5 * math.log(math.cosh(r))
    )
    amps[2 * k] = np.where(k % 2 == 0, 1.0, -1.0) * np.exp(log_mag)
    kept = float(np.sum(amps**2))
    return amps / math.sqrt(kept), max(0.0, 1.0 - kept)


def auto_cutoff(r: float, tail_tol: float, start: int = 8) -> int:
    """Smallest cutoff whose monitored edge levels start with population below tail_tol / 2."""
    cutoff = start
    while squeezed_vacuum_amplitudes(r, cutoff - EDGE_LEVELS)[1] >= 0.5 * tail_tol:
        cutoff += 2
    return cutoff


def _lowering(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim)), 1, format="csr")


def _hamiltonian(model, dim: int) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    eye = sp.identity(dim, format="csr")
    a = _lowering(dim)
    c = sp.kron(a, eye, format="csr")
    b = sp.kron(eye, a, format="csr")
    cd, bd = c.conj().T, b.conj().T
    if isinstance(model, RwaModel):
        h = model.omega_c * cd @ c + model.omega_m * bd @ b + model.g * (cd @ b + c @ bd)
        drive = complex(model.B_x, model.B_y) / 2
        h = h - drive * bd - drive.conjugate() * b
    else:
        h = model.omega_c * cd @ c + model.omega_m * bd @ b + model.g * (c + cd) @ (b + bd)
    return sp.csr_matrix(h, dtype=complex), c, b


def _initial_squeezing(model, initial):
    if initial is not None:
        return tuple(float(x) for x in initial)
    return (0.0, model.r0) if isinstance(model, RwaModel) else (0.0, 0.0)


class _BlockPropagator:
    """exp(-i H t) applied blockwise over the connected sectors of H."""

    def __init__(self, h: sp.csr_matrix, support: np.ndarray):
        _, labels = connected_components(abs(h) > 0, directed=False)
        wanted = np.unique(labels[support])
        self.blocks = []
        for lab in wanted:
            idx = np.flatnonzero(labels == lab)
            block = h[idx][:, idx].toarray()
            if not np.any(block.imag):
                block = block.real
            vals, vecs = np.linalg.eigh(block)
            self.blocks.append((idx, vals, vecs))

    def apply(self, psi0: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros_like(psi0)
        for idx, vals, vecs in self.blocks:
            coeff = vecs.conj().T @ psi0[idx]
            out[idx] = vecs @ (np.exp(-1j * vals * t) * coeff)
        return out


def _moments(psi: np.ndarray, c: sp.csr_matrix, b: sp.csr_matrix) -> GaussianState:
    """Quadrature moments from lowering operators only.

    Raising operators are never applied to the truncated vector; the
    commutator [a, a^dag] = 1 supplies the anti-normal-ordered terms.
    """
    low = [c, b]
    vec = [op @ psi for op in low]
    mean = np.array([np.vdot(psi, v) for v in vec])
    n_mat = np.array([[np.vdot(vi, vj) for vj in vec] for vi in vec])  # <a_i^dag a_j>
    m_mat = np.array([[np.vdot(psi, low[i] @ vec[j]) for j in range(2)] for i in range(2)])  # <a_i a_j>

    # second moments of L = (c, c^dag, b, b^dag)
    k = np.zeros((4, 4), dtype=complex)
    first = np.zeros(4, dtype=complex)
    for i in range(2):
        first[2 * i], first[2 * i + 1] = mean[i], mean[i].conjugate()
        for j in range(2):
            k[2 * i, 2 * j] = m_mat[i, j]
            k[2 * i + 1, 2 * j + 1] = m_mat[i, j].conjugate()
            k[2 * i + 1, 2 * j] = n_mat[i, j]
            k[2 * i, 2 * j + 1] = n_mat[j, i] + (1.0 if i == j else 0.0)
    t1 = np.kron(np.eye(2), np.array([[1.0, 1.0], [-1j, 1j]]) / math.sqrt(2.0))
    second = t1 @ (k + k.T) @ t1.T
    d = t1 @ first
    gamma = (second - 2.0 * np.outer(d, d)).real
    return GaussianState(d.real, gamma)


def _edge_population(psi: np.ndarray, dim: int) -> float:
    prob = np.abs(psi.reshape(dim, dim)) ** 2
    edge = dim - EDGE_LEVELS
    return float(prob[edge:, :].sum() + prob[:edge, edge:].sum())


def fock_run(cfg: FockConfig, t: float, initial: tuple[float, float] | None = None) -> FockResult:
    """Evolve a product of squeezed vacua and return moments plus diagnostics.

    ``initial`` gives the squeezing of (cavity, magnon); by default the cavity
    is in vacuum and the magnon carries the model's r0 (RWA) or vacuum (critical).
    """
    model = cfg.model
    if isinstance(model, RwaModel) and model.kappa > 0:
        raise UnsupportedNoise("the Fock oracle is unitary; use lyapunov_integrate for kappa > 0")
    if not t >= 0:
        raise InvalidParameter(f"time must be non-negative, got {t}")
    r_c, r_m = _initial_squeezing(model, initial)
    if cfg.cutoff is not None:
        return _fock_at_cutoff(cfg, t, r_c, r_m, cfg.cutoff)
    # the dynamics can push population upwards, so an automatic cutoff may grow
    cutoff = max(auto_cutoff(r_c, cfg.tail_tol), auto_cutoff(r_m, cfg.tail_tol))
    for _ in range(AUTO_GROWTH_STEPS):
        try:
            return _fock_at_cutoff(cfg, t, r_c, r_m, cutoff)
        except CutoffTooSmall:
            cutoff += 8
    return _fock_at_cutoff(cfg, t, r_c, r_m, cutoff)


def _fock_at_cutoff(cfg: FockConfig, t: float, r_c: float, r_m: float, cutoff: int) -> FockResult:
    model = cfg.model
    dim = cutoff + 1
    amp_c, tail_c = squeezed_vacuum_amplitudes(r_c, cutoff)
    amp_m, tail_m = squeezed_vacuum_amplitudes(r_m, cutoff)
    psi0 = np.kron(amp_c, amp_m).astype(complex)
    tail = tail_c + tail_m

    h, c, b = _hamiltonian(model, dim)
    prop = _BlockPropagator(h, np.flatnonzero(psi0))
    n_check = 16 if cfg.dt is None else max(1, math.ceil(t / cfg.dt))
    psi = psi0
    drift = 0.0
    for s in np.linspace(0.0, t, n_check + 1)[1:] if t > 0 else [0.0]:
        psi = prop.apply(psi0, s)
        tail = max(tail, _edge_population(psi, dim))
        drift = max(drift, abs(np.linalg.norm(psi) - 1.0))
    if tail >= cfg.tail_tol:
        raise CutoffTooSmall(f"cutoff {cutoff} leaves tail population {tail:.3g} >= {cfg.tail_tol:.3g}")
    if drift >= UNITARITY_TOL:
        raise CutoffTooSmall(f"norm drift {drift:.3g} exceeds {UNITARITY_TOL:.0e}")
    return FockResult(_moments(psi, c, b), psi, cutoff, tail, drift)


def fock_evolve(cfg: FockConfig, t: float, initial: tuple[float, float] | None = None) -> GaussianState:
    return fock_run(cfg, t, initial).state


def _drift_matrix(m: RwaModel) -> np.ndarray:
    k, wc, wm, g = 0.5 * m.kappa, m.omega_c, m.omega_m, m.g
    return np.array(
        [
            [-k, wc, 0.0, g],
            [-wc, -k, -g, 0.0],
            [0.0, g, -k, wm],
            [-g, 0.0, -wm, -k],
        ]
    )


def lyapunov_trajectory(m: RwaModel, times, rtol: float = 1e-11, atol: float = 1e-13) -> list[GaussianState]:
    """Joint two-mode states at each of the increasing ``times``."""
    times = [float(x) for x in times]
    if any(x < 0 for x in times) or any(b < a for a, b in zip(times, times[1:])):
        raise InvalidParameter("times must be non-negative and non-decreasing")
    drift = _drift_matrix(m)
    diffusion = m.kappa * (2 * m.n_noise + 1) * np.eye(4)
    # transverse field drives the magnon quadratures
    force = math.sqrt(2.0) * np.array([0.0, 0.0, -0.5 * m.B_y, 0.5 * m.B_x])
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))

    def rhs(_, y):
        gam = y[:16].reshape(4, 4)
        dg = drift @ gam + gam @ drift.T + diffusion
        dd = drift @ y[16:] + force
        return np.concatenate([dg.ravel(), dd])

    def check(y):
        gam = y[:16].reshape(4, 4)
        gam = 0.5 * (gam + gam.T)
        nu = np.abs(np.linalg.eigvals(1j * omega @ gam).real)
        if nu.min() < 1.0 - PHYSICALITY_TOL:
            raise NonPhysicalState(f"moment integration left the physical set (nu_min = {nu.min():.12g})")

    y = np.concatenate([np.diag([1.0, 1.0, math.exp(-2 * m.r0), math.exp(2 * m.r0)]).ravel(), np.zeros(4)])
    now, out = 0.0, []
    for target in times:
        if target > now:
            sol = solve_ivp(rhs, (now, target), y, method="RK45", rtol=rtol, atol=atol)
            if not sol.success:
                raise ArithmeticError(f"moment integration failed: {sol.message}")
            for col in sol.y.T:
                check(col)
            y, now = sol.y[:, -1], target
        gam = y[:16].reshape(4, 4)
        out.append(GaussianState(y[16:].copy(), 0.5 * (gam + gam.T)))
    return out


def lyapunov_integrate(m: RwaModel, t: float) -> GaussianState:
    return lyapunov_trajectory(m, [t])[0]
