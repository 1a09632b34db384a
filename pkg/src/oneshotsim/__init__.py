"""One-shot distributed source simulation toolkit."""

from ._kernels import BACKEND as kernel_backend
from .states import (
    CQState,
    DensityMatrix,
    PureState,
    SchmidtSpectrum,
    SeparableDecomposition,
    apply_channel,
    apply_channel_local,
    classical_state,
    fidelity,
    fidelity_squared,
    make_pure,
    make_schmidt,
    make_separable,
    make_state,
    partial_trace,
    perfect_correlation,
    permute_subsystems,
    pinch,
    purified_distance,
    purify,
    schmidt,
    tensor,
    trace_distance,
)
from .entropies import (
    DivergenceResult,
    binary_entropy,
    cond_von_neumann,
    d_bar_zero,
    d_hypo,
    d_info_spectrum,
    d_max,
    h0,
    h_min_cond,
    h_min_cond_cq,
    h_r,
    rel_entropy,
    renyi,
    von_neumann,
)
from .solver import (
    DominationSDP,
    SearchConfig,
    WeightedPointSet,
    caratheodory_prune,
    local_search,
    maximize_concave_1d,
    solve_domination,
)
from .mutualinfo import (
    MIRequest,
    check_hypo_expectation_claim,
    check_mi_symmetries,
    mi,
    mi_classical_smoothed_up,
    mi_up_cq_closed_form,
    mutual_info,
    renyi_cq_decomposition,
)
from .commoninfo import (
    ClassicalExtension,
    CommonInfoResult,
    c_max,
    c_max_smoothed,
    c_tilde_h,
    c_tilde_zero,
    check_markov,
    formation_search,
    multi_party_monotonicity,
    reduce_cardinality,
    trivial_extension,
    typical_extension,
    wyner_ci,
)
from .covering import (
    BoundConstants,
    Codebook,
    CoveringExperiment,
    build_dss_protocol,
    covering_error,
    expected_covering_error,
    g_conversion,
    kappa,
    min_codebook_size,
    one_shot_bounds_report,
    soft_cover_bounds,
)
from .embezzle import (
    Catalyst,
    EmbezzleReport,
    approx_ent_rank_pure,
    embezzle_fidelity,
    flagged_embezzle_bounds,
    max_local_unitary_fidelity,
    min_catalyst_size,
    mu_state,
    purification_schmidt_ranks,
)
from .aep import AEPScan, check_converse_envelope, envelope_alt_smci, envelope_smci, run_aep_scan

__version__ = "0.1.0"
