"""Numerical laboratory for lattice point counts in balls.

The package measures the remainder between the number of lattice points
in a ball of radius t and the ball's volume, across deterministic bases,
compact perturbation families, and Haar-random unimodular lattices, and
provides the Fourier-side tools (ball transforms, mollified Poisson
summation, oscillatory integrals) that explain the observed scaling.
"""

__version__ = "0.1.0"

from .basis import (
    IwasawaForm,
    LatticeBasis,
    NotUnimodularError,
    SingularBasisError,
    UnimodularMatrix,
    basis_from_json,
    basis_to_json,
    dual_norm,
    gram,
    identity_basis,
    iwasawa_decompose,
    reduce_to_nplus,
    transformed_coords,
)
from .counting import (
    CountResult,
    ball_volume,
    count_points,
    count_scan,
    error_term,
    unit_ball_volume,
)
from .fourier import (
    MollifierSpec,
    SandwichResult,
    SmoothedCount,
    bessel_j1,
    hat_chi_ball,
    hat_chi_lattice,
    mollifier_hat,
    sandwich_check,
    smoothed_count,
)
from .meanvalue import (
    CalibrationError,
    CnResult,
    ExperimentStats,
    ScalingFit,
    compute_cn,
    fit_scaling_exponent,
    mc_stats,
    rogers_second_moment,
    scaling_identity_check,
    siegel_calibration,
    siegel_mean,
    variance_prediction,
)
from .oscillatory import (
    HessianReport,
    OscillatorySpec,
    ResolutionError,
    VdcReport,
    I_kl,
    I_kl_eta_average,
    discriminant,
    hessian_bound_check,
    phase,
    vdc_check,
    weight,
)
from .sampling import (
    CompactFamilySpec,
    HaarSamplerConfig,
    RejectionBudgetError,
    Seed,
    rng_for,
    sample_compact,
    sample_det_band,
    sample_haar_unimodular,
)
