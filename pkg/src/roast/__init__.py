"""Fast orthonormal approximate Slepian transform.

An orthonormal basis that augments the in-band DFT columns with a few
extra directions chosen inside the out-of-band DFT span, so that the span
of the leading discrete prolate spheroidal sequences (and with it every
oversampled bandlimited signal) is captured to any prescribed accuracy
while analysis and synthesis stay at FFT cost.
"""

__version__ = "0.1.0"

from .prolate import (
    DftBandSplit,
    DpssBasis,
    ProlateOperator,
    SignalEnsemble,
    build_band_split,
    build_dpss,
    build_prolate,
    log_width_constant,
    prolate_apply,
    prolate_dense,
    random_bandlimited,
    sampled_sinusoid,
)
from .basis import (
    BasisFormatError,
    FstAnalog,
    RoastBasis,
    SubDftBasis,
    apply_analysis,
    apply_synthesis,
    build_fst_analog,
    build_roast,
    build_roast_randomized,
    build_subdft,
    cross_operator_dense,
    deserialize_basis,
    dft_columns,
    fst_rank_bound,
    project,
    rank_for_average,
    rank_for_capture,
    rank_for_capture_angle,
    rank_for_pointwise,
    serialize_basis,
    sketch_for_average,
    sketch_for_capture,
    sketch_for_capture_angle,
    sketch_for_pointwise,
)
from .diagnostics import (
    AngleReport,
    BoundLedger,
    LedgerEntry,
    SpectrumReport,
    dpss_capture_report,
    eigenvalue_concentration_report,
    integrated_residual,
    integrated_residual_quadrature,
    residual_paths_agree,
    residual_snr,
    singular_decay_report,
    sinusoid_derivative_check,
    subspace_angle,
)
from .recovery import (
    CgResult,
    RecoveryProblem,
    RecoveryReport,
    build_recovery_problem,
    cgd_solve,
    condition_estimate,
    recovery_experiment,
)
