"""Numerical laboratory for transport costs of sign decompositions and
nodal-set measures on the unit cube, with the discrete graph analogue."""

__version__ = "0.1.0"

from .errors import (
    AllConstant,
    BadSubset,
    Disconnected,
    EmptyBand,
    EmptySupport,
    EpsTooLarge,
    MassMismatch,
    MisalignedEpsilon,
    NotZeroMean,
    OtnodalError,
    ResolutionTooCoarse,
    TooFewPoints,
    TooLargeForExhaustive,
    UnknownFamily,
    WrongDimension,
    ZeroNodal,
)
from .families import FamilySpec, extremal_family, sample_family, trig_polynomial
from .graphs import (
    Graph,
    VertexFunction,
    boundary_size,
    centered_indicator,
    cycle_graph,
    complete_graph,
    design_extremality_experiment,
    graph_w1,
    laplacian_spectrum,
    load_graph,
    mcgee_graph,
    nauru_graph,
    path_graph,
    perfect_domination_check,
    search_designs,
    uncertainty_product_graph,
    verify_design,
)
from .grids import (
    DiscreteMeasure,
    GridFunction,
    load_grid,
    make_zero_mean,
    nodal_measure,
    norms,
    save_grid,
    split_signs,
)
from .spectral import (
    SpectralFunction,
    heat_bound_check,
    heat_evolve,
    highpass_sample,
    neumann_eigenfunction,
    sturm_hurwitz_check,
    synthesize,
)
from .transport import (
    SolverConfig,
    TransportPlan,
    check_plan,
    coarsen_measure,
    sinkhorn,
    solve_transport,
    w1_1d_oracle,
    wp_exact,
)
from .uncertainty import (
    CubeDecomposition,
    UncertaintyReport,
    align_epsilon,
    critical_scale,
    cube_decomposition,
    scaling_sweep,
    uncertainty_product,
)
