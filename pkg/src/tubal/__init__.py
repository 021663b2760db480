"""Low-tubal-rank tensor recovery: t-SVD algebra, sub-Gaussian measurements,
tensor RIP analysis and a regularized tensor nuclear norm solver."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DimMismatch,
    ImageFormatError,
    InvalidConfig,
    InvalidRank,
    NonFinite,
    NormNotUnit,
    NumericalFailure,
    SymmetryViolation,
    TubalError,
    ZeroReference,
)
from .measure import (  # noqa: E402
    DiagonalizedMeasurement,
    MeasurementEnsemble,
    adjoint,
    apply,
    expected_energy_check,
    make_ensemble,
    make_orthogonal_ensemble,
    noisy_measure,
    operator_norm_sq,
)
from .rip import (  # noqa: E402
    BudgetReport,
    RipEstimate,
    covering_log_bound,
    delta_vs_m_curve,
    dof,
    estimate_delta,
    gamma2_upper_bound,
    sample_unit_low_tubal_rank,
    theorem1_budget,
)
from .solver import SolveResult, SolverConfig, objective, rel_error, solve_rtnnm  # noqa: E402
from .t_algebra import (  # noqa: E402
    SingularTubes,
    TSvdFactors,
    singular_tubes,
    tnn,
    tprod,
    tsvd,
    tsvt,
    tubal_rank,
)
from .tensor_core import (  # noqa: E402
    bcirc,
    dft_mode3,
    fold,
    frobenius_norm,
    idft_mode3,
    identity_tensor,
    read_t3f,
    transpose_t,
    unfold,
    vec,
    write_t3f,
)
