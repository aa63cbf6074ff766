"""Counting-measure solutions of stochastic inverse problems.

Given a deterministic map from an n-dimensional parameter box to m <= n
outputs and a probability density on the outputs, this package
approximates the probability measure on the parameters whose push-forward
matches the output density. The approximation lives on a finite sample
set: each sample carries the share of its output bin's probability, and
events are measured by summing the mass of the samples they contain.
Companion tools quantify the finite-sampling and numerical-map errors of
any computed event probability.
"""

from .density import (
    DataPartition,
    ScaledBeta,
    SimpleFunctionDensity,
    beta_for_reference,
    bin_to_simple_function,
    sample_density,
    uniform_on_box,
)
from .domain import (
    Adjacency,
    Box,
    BoxUnion,
    CellUnion,
    CellVolumes,
    ParameterDomain,
    SampleSet,
    VolumeEstimate,
    estimate_adjacency,
    estimate_cell_volumes,
    max_cell_radius,
    nearest_sample,
    symmetric_difference_volume,
    voronoi_coverage,
)
from .errors import (
    ErrorReport,
    RegionSandwich,
    Term1Bounds,
    Term2Estimate,
    build_sandwich,
    distinguishing_density,
    error_report,
    improved_invert,
    optimal_coverage,
    term1_bounds,
    term2_estimate,
    term2_from_values,
)
from .exceptions import (
    ArgumentError,
    AssumptionError,
    DensityError,
    DivergenceError,
    DomainMembershipError,
    EmptyCoverageError,
    EmptyDensityError,
    GdViolationError,
    InvMeasureError,
    LostMassWarning,
    OutsideMassWarning,
    StiffnessError,
)
from .models import (
    FunctionModel,
    LinearMap,
    MseirsModel,
    MseirsParameters,
    PerturbedModel,
    QoIModel,
    SaddleMap,
    mseirs_domain,
    mseirs_rhs,
    perturb,
)
from .ode import OdeSolution, dopri45_step, integrate_dopri45
from .sampling import (
    DensityWeightedRule,
    LatinHypercubeRule,
    SamplingDensity,
    SerpentineGridRule,
    UniformRule,
    effective_weights,
    generate,
)
from .solver import (
    AnsatzWeights,
    CountingMeasure,
    GridMeasure,
    InverseDensityEstimator,
    MarginalTable,
    event_probability,
    marginalize,
    solve_counting,
    solve_grid,
)

__version__ = "0.1.0"
