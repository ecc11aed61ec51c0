"""Finite-memory modeling of the nonlinear fiber channel and capacity bounds.

Subsystems
----------
config    physical link parameters, pulse shapes, unit handling
blocks    symbol blocks emitters and constellations
coupling  inter-symbol interaction kernel and link-integrated matrices
ssfm      split-step ground-truth simulator and matched-filter receiver
channel   perturbative discrete-time channel (deterministic + stochastic)
cnormal   multivariate complex-normal conditional law
ripple    ring-mixture input distributions
capacity  capacity lower bounds (analytic and Monte-Carlo)
cli       batch experiment runner (``fibercap`` console script)
"""

from .blocks import Constellation, SymbolBlock, sample_block
from .capacity import (
    BelowSpliceError,
    MIEstimate,
    NoRootError,
    RippleOptimum,
    gaussian_input_bound,
    mi_estimate,
    nli_variance,
    optimize_ripple,
    rate_uncompensated,
    reference_noise_var,
    shannon_rate,
    sn_interference_coeff,
    splice_power,
    saturation_power,
    two_ring_bound,
    two_ring_construction,
)
from .channel import (
    NoiseMixing,
    apply_first_order,
    deterministic_orders,
    forward_sample,
    noise_mixing,
    nonlinear_phase_shift,
)
from .cnormal import ComplexNormalLaw, DegenerateLawError, law_from_mixing, log_pdf, sample_law
from .config import (
    ConfigError,
    PulseShape,
    SystemConfig,
    dbm_to_watt,
    make_config,
    pulse_spectrum,
    watt_to_dbm,
)
from .coupling import (
    CouplingTensor,
    MemoryChoice,
    MemoryFitError,
    PowerProfiles,
    QuadratureError,
    integrate_tensor,
    interaction_kernel_freq,
    interaction_kernel_freq_grid,
    interaction_kernel_time,
    load_tensor,
    save_tensor,
    select_memory,
)
from .ripple import RippleDistribution
from .ssfm import Field, GridError, modulate, propagate, receive, run_ensemble

__version__ = "0.1.0"
