"""Counting and equidistribution experiments for diagonal flows on the space of lattices."""

__version__ = "0.1.0"

from latorbit.geometry import (  # noqa: E402
    Annulus,
    Ball,
    Box,
    DirectionSet,
    ERegion,
    FlowDecomposition,
    FRegion,
    Region,
    UnsupportedMethodError,
    WeightPair,
    diagonal_flow,
    flow_decomposition,
    project_to_sphere,
    quasi_norm,
    region_contains,
    region_volume,
    weighted_flow,
)
from latorbit.lattice import (  # noqa: E402
    AlphaResult,
    LatticeBasis,
    MinimaResult,
    ThetaMatrix,
    UnsupportedDimensionError,
    alpha,
    apply_flow,
    enumerate_points,
    successive_minima,
    unipotent_lattice,
)
from latorbit.siegel import (  # noqa: E402
    RiemannFunction,
    blichfeldt_ratio,
    siegel_transform,
    theta_average_identity,
)
from latorbit.counting import (  # noqa: E402
    CountQuery,
    CountReport,
    birkhoff_indicator_integral,
    count_solutions,
    error_exponent_fit,
    sandwich_check,
    schmidt_experiment,
)
from latorbit.ergodic import (  # noqa: E402
    DecayBound,
    DyadicInterval,
    ExceptionalReport,
    ProcessEnsemble,
    double_equi_estimate,
    dyadic_cover,
    dyadic_family,
    exceptional_fraction,
    pointwise_rate_check,
    variance_bound_check,
    window_integral,
)
