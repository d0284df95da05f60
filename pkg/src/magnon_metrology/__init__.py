"""Gaussian-state quantum metrology for a cavity coupled to a magnon mode."""

from .critical import (
    BogoliubovData,
    CriticalModel,
    bogoliubov,
    fisher_at_special_times,
    gamma_c_closed,
    joint_evolve_critical,
    t_star_critical,
)
from .errors import *  # noqa: F401,F403
from .fisher import FisherResult, ParamDerivatives, cfi_general, cfi_optimal, derivatives_fd, qfi
from .gaussian import (
    GaussianState,
    StandardForm,
    entanglement_entropy,
    from_standard_form,
    photon_number,
    reduce,
    to_standard_form,
)
from .oracles import FockConfig, fock_evolve, lyapunov_integrate
from .rwa import (
    EvolutionFactors,
    RwaModel,
    displacement_nonparallel,
    entanglement_vs_time,
    evolve_cavity,
    joint_evolve_noiseless,
    t_star,
)
from .sweep import FitResult, SweepRecord, loglog_fit, nu_scaling_check, peak_find, snl_hl_experiment

__version__ = "0.1.0"
