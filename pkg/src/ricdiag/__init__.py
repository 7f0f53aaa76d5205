"""Self-diagnosis toolkit for base-station telemetry.

Fuses performance counters with fault and configuration events into a
per-station design matrix, diagnoses the root cause of KPI degradations
through density-based anomaly detection and binary correlation, and
discovers relationships between observable quantities with fixed-centroid
one-dimensional clustering.
"""

from ._backend import BACKEND_NAME, available_backends
from .bench import (
    BenchPoint,
    doubling_ratios,
    linear_fit,
    loglog_exponent,
    run_backend_compare,
    run_rca_scaling,
    run_reldisc_scaling,
    time_callable,
)
from .cluster import (
    CentroidLine,
    ClusterAssignment,
    DbscanParams,
    DbscanResult,
    EmptyInput,
    NOISE,
    NonFiniteInput,
    dbscan,
    kmeans1d_assign,
    make_centroid_line,
    minmax_scale,
)
from .rca import (
    CausalityFilter,
    DEFAULT_EPSILON_GRID,
    DEFAULT_MIN_PTS,
    KpiSpec,
    RankingEntry,
    RcaReport,
    accuracy,
    binarize_column,
    binarize_kpi,
    diagnose,
    phi,
    read_filter_csv,
)
from .reldisc import (
    DEFAULT_GAMMA,
    DEFAULT_K,
    LookupTable,
    RelDiscParams,
    aggregate_clusters,
    discover,
    impute_forward_fill,
    plot_data,
    smooth_moving_average,
    write_lookup_csv,
)
from .synth import (
    InjectedCause,
    InvalidScenario,
    SynthOutput,
    SynthScenario,
    generate,
    generate_relationship,
)
from .telemetry import (
    CM,
    CmEvent,
    DesignMatrix,
    FM,
    FmEvent,
    PM,
    PmSeries,
    TimeGrid,
    bin_time,
    build_design_matrix,
    pulse_to_intervals,
    read_cm_csv,
    read_fm_csv,
    read_matrix_csv,
    read_pm_csv,
    reconstruct_pulse,
    truncate_matrix,
    write_matrix_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "BenchPoint",
    "CM",
    "CausalityFilter",
    "CentroidLine",
    "ClusterAssignment",
    "CmEvent",
    "DEFAULT_EPSILON_GRID",
    "DEFAULT_GAMMA",
    "DEFAULT_K",
    "DEFAULT_MIN_PTS",
    "DbscanParams",
    "DbscanResult",
    "DesignMatrix",
    "EmptyInput",
    "FM",
    "FmEvent",
    "InjectedCause",
    "InvalidScenario",
    "KpiSpec",
    "LookupTable",
    "NOISE",
    "NonFiniteInput",
    "PM",
    "PmSeries",
    "RankingEntry",
    "RcaReport",
    "RelDiscParams",
    "SynthOutput",
    "SynthScenario",
    "TimeGrid",
    "accuracy",
    "aggregate_clusters",
    "available_backends",
    "bin_time",
    "binarize_column",
    "binarize_kpi",
    "build_design_matrix",
    "dbscan",
    "diagnose",
    "discover",
    "doubling_ratios",
    "generate",
    "generate_relationship",
    "impute_forward_fill",
    "kmeans1d_assign",
    "linear_fit",
    "loglog_exponent",
    "make_centroid_line",
    "minmax_scale",
    "phi",
    "plot_data",
    "pulse_to_intervals",
    "read_cm_csv",
    "read_filter_csv",
    "read_fm_csv",
    "read_matrix_csv",
    "read_pm_csv",
    "reconstruct_pulse",
    "run_backend_compare",
    "run_rca_scaling",
    "run_reldisc_scaling",
    "smooth_moving_average",
    "time_callable",
    "truncate_matrix",
    "write_lookup_csv",
    "write_matrix_csv",
    "__version__",
]
