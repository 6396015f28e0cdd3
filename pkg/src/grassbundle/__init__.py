"""Charts and bundle structure for subspaces and idempotent matrices over R and C."""

from .bundle import (
    ChartCoords,
    ad_right_inverse,
    check_idempotent,
    delta_projector,
    fiber_add,
    fiber_scale,
    from_involution,
    inv_chart,
    inv_chart_inv,
    kernel_of,
    mu_chart,
    mu_chart_inv,
    pair_chart,
    pair_chart_inv,
    psi_banachize,
    psi_banachize_inv,
    range_of,
    theta_trivialize,
    theta_untrivialize,
    to_involution,
    transition,
    xi,
)
from .errors import (
    CoordOutsideChart,
    ComplementRequired,
    FiberMismatch,
    FieldMismatch,
    GrassbundleError,
    IllConditioned,
    NotIdempotent,
    NotInvolution,
    NotProper,
    RankDeficient,
    RankMismatch,
)
from .grassmann import (
    NilpotentCoord,
    OperatorBetween,
    Subspace,
    is_complement,
    lambda_extend,
    lambda_restrict,
    make_subspace,
    oblique_projector,
    p_chart,
    pi_chart,
    pi_chart_inv,
    q_chart,
    subspace_gap,
)
from .kernel import ToleranceConfig, default_config
from .paths import connect_idempotents, gram_schmidt_rep, same_component, similarity_witness
from .tangent import (
    FiberOperator,
    TangentVector,
    idempotent_to_tangent,
    nu_chart,
    nu_chart_inv,
    operator_metric,
    pseudo_metric,
    psi_derivative,
    tangent_embed,
    tangent_to_idempotent,
    trace_metric,
)

__version__ = "0.1.0"
