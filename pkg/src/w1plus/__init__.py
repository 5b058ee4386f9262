"""Canonical W1,+ geodesics on finite graphs and entropy convexity checks."""

from .bbtriple import (
    BBTriple,
    check_I_bound,
    edge_energy,
    functional_I,
    functional_I_ibp,
    lower_bound_general,
    validate,
)
from .binomial_w2 import (
    BinomialW2Curve,
    compare_h,
    entropy_convexity_report,
    eval_binomial_w2,
    h_tilde,
    log_concavity,
    stochastic_domination,
)
from .entropy import (
    Potential,
    entropy_along_curve,
    holder_gap,
    psi,
    relative_entropy,
    relative_entropy_bound,
    renyi_entropy,
    shannon_entropy,
    velocity_fields,
    w_squared,
)
from .geodesic import (
    ConvergenceError,
    GeodesicCurve,
    GeodesicError,
    canonical_geodesic,
    check_w1_geodesic,
    continuity_residuals,
    eval_triple,
    solve_canonical,
)
from .graphs import (
    Graph,
    GraphError,
    build_graph,
    cayley_graph,
    complete_graph,
    count_geodesics,
    cycle_graph,
    enumerate_geodesics,
    hypercube,
    path_graph,
    product,
    product_of,
)
from .orientation import (
    Orientation,
    PathCounts,
    divergence,
    divergence2,
    edge_divergence,
    m_weight,
    orient,
    path_counts,
)
from .products import (
    ProductOrientation,
    check_orientation_decomposition,
    enumerate_squares,
    product_orientation,
    project_triple,
    split_divergence,
    tensorization_check,
)
from .transport import (
    Coupling,
    Measure,
    in_some_optimal_support,
    optimal_coupling,
    w1_cost,
    w2_monotone_coupling,
)

__version__ = "0.1.0"
