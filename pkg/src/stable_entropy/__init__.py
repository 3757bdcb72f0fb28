"""Numerical lab for entropic convergence of normalized i.i.d. sums to
non-extremal stable laws: exact densities by Fourier inversion, grid
convolution powers, the bounded/remainder decomposition with its
quantitative closeness checks, entropy finiteness criteria, end-to-end
convergence experiments, and Monte-Carlo cross-checks."""

from .config import DEFAULT_TOL, Tolerances
from .convergence_lab import (
    ConvergenceRow,
    ExperimentConfig,
    cf_envelope_check,
    kl_upper_bound_gaussian,
    kl_upper_bound_heavy,
    llt_check,
    run_convergence,
    zn_density,
)
from .decomposition import (
    BoundedSplit,
    SmoothedPair,
    decomposition_checks,
    modified_density,
    small_part_mass,
    split,
)
from .entropy_criteria import (
    FinitenessReport,
    Verdict,
    entropy_identity_residual,
    entropy_upper_bound_check,
    finiteness_diagnosis,
    log_plus_reference_moment,
    monotonicity_check,
)
from .errors import (
    ConfigError,
    DivergentMomentError,
    NumericalError,
    QuadratureError,
    StableEntropyError,
    TruncationError,
)
from .grid_density import (
    GridDensity,
    abs_moment,
    affine,
    cf_of_grid,
    cf_tail_integral,
    convolve_power,
    distance,
    entropy,
    from_function,
    relative_entropy,
)
from .mc_oracle import McEstimate, knn_entropy, mc_relative_entropy, sample_zn
from .sources import NormalizerSequence, SourceModel, make_source
from .stable_law import (
    StableClass,
    StableLogDensity,
    StableParams,
    cf,
    classify,
    log_pdf,
    pdf,
    sample,
    tail_constants,
)

__version__ = "0.1.0"
