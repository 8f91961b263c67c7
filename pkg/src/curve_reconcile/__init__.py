"""Forecast reconciliation for aggregated curves.

An aggregated curve ``a`` (cumulative volumes, for instance) and its
increments ``b`` form a small hierarchy.  This package builds that
hierarchy, reconciles incoherent forecasts of it, estimates the error
covariances the optimal reconcilers need, runs Monte-Carlo comparisons and
turns auction bid ladders into curves and price classes.
"""

from .covariance import (
    SCHEMES,
    CovEstimate,
    estimate_w,
    ledoit_wolf_delta,
    schafer_strimmer_lambda,
    w_diagonal,
    w_glasso,
    w_identity,
    w_lambda,
    w_ledoit_wolf,
    w_sample,
    w_shrink_schafer,
)
from .errors import (
    ConvergenceError,
    CurveReconcileError,
    DegenerateCurveError,
    DegenerateSeriesError,
    DivisionError,
    EmptyInputError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidDimensionError,
    InvalidPriceError,
    NoEquilibriumError,
    SingularMatrixError,
)
from .hierarchy import (
    BottomSeries,
    Curve,
    HierarchyVector,
    StructureMatrices,
    aggregate_bottom,
    build_hierarchy_vector,
    difference_matrix,
    disaggregate,
    disaggregation_matrix,
    representation_matrix,
    reversed_without,
    split_hierarchy,
    structure_matrices,
    summation_matrix,
)
from .market_curves import (
    BidLadder,
    PriceClassGrid,
    StepCurve,
    bin_volumes,
    build_step_curve,
    intersect,
    make_price_classes,
    make_window_price_classes,
)
from .reconcilers import (
    METHODS,
    OPTIMAL_METHODS,
    MappingMatrix,
    Proportions,
    ReconciledForecast,
    build_mapping,
    mapping_aggregated_down,
    mapping_bottom_up,
    mapping_optimal,
    mapping_top_down,
    proportions_aggregated_down,
    proportions_top_down,
    reconcile,
    reconcile_in_representation,
)
from .simulation import (
    SimConfig,
    SimResult,
    error_metrics,
    fit_ar1,
    rmse_table,
    run_experiment,
    run_grid,
    simulate_var1,
)

__version__ = "0.1.0"
