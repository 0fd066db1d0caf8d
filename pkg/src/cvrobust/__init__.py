"""Two-mode bosonic states under loss/thermal and dephasing noise.

Fock-space integration, an exact beam-splitter dilation, a covariance
matrix track for the two-mode squeezed state, negativity-based
separation times and an iso-energy robustness comparison.
"""

from .channels import (
    ChannelKind,
    ChannelParams,
    IntegratorConfig,
    Trajectory,
    beam_splitter_unitary,
    dephasing_exact,
    dephasing_rhs,
    dilation_evolve,
    evolve,
    expected_energy,
    lindblad_dissipator,
    loss_thermal_rhs,
    mixing_angle,
    propagate,
)
from .entanglement import NegativityResult, SeparationTime, is_ppt, log_negativity, separation_time
from .errors import (
    ChannelKindError,
    ConfigError,
    CutoffTooSmall,
    CVRobustError,
    EnergyMismatch,
    NeverSeparates,
    NonPhysicalCM,
    NoSeparationFound,
    NumericalHealthViolation,
    TargetUnreachable,
)
from .fock import (
    DensityOperator,
    Ket,
    Mode,
    annihilation_operator,
    mean_energy,
    partial_trace,
    partial_transpose,
    tensor,
    trace_distance,
)
from .gaussian import (
    CovarianceMatrix,
    channel_on_covariance,
    gaussian_log_negativity,
    gaussian_separation_time,
    pt_min_symplectic_eigenvalue,
    tmss_covariance,
)
from .states import (
    match_energy,
    pnes_ket,
    thermal_density,
    three_term_pnes_family,
    tmss_family,
    two_mode_squeezed_ket,
    two_term_pnes_family,
)

__version__ = "0.1.0"
