"""Semantic-aware multicast delivery simulator for tiled XR frames."""

from importlib import resources

from .clustering import (
    CONVENTIONAL,
    SEMANTIC,
    BalanceReport,
    ClusterPlan,
    balance_report,
    decide_clusters,
    forced_mbs_tiles,
)
from .errors import (
    DimensionMismatchError,
    InfeasibleError,
    InstanceTooLargeError,
    ScenarioError,
    SemcastError,
)
from .hetnet import (
    BaseStation,
    BsBudget,
    DeliveryBudget,
    HetNetTopology,
    MBS_ID,
    ResolutionLadder,
    bs_budget_bits,
    tile_cost,
)
from .pipeline import RunConfig, compare, evaluate, run_pipeline
from .qoe import QoEReport, qoe_report
from .scene import (
    FeatureDistribution,
    FoVRequest,
    Scenario,
    TileGrid,
    TileId,
    dump_scenario,
    load_scenario,
    tiles_of_viewport,
)
from .scheduling import Schedule, UserProgress, schedule, user_progress
from .significance import (
    SignificanceSet,
    TileClassification,
    UOAProfile,
    classify_tiles,
    compute_significance_set,
    multi_user_significance,
    overlap_degree,
    per_bs_significance,
    per_user_significance,
)
from .transcode import (
    GaParams,
    avg_level_by_significance,
    objective,
    optimize_levels_exact,
    optimize_levels_ga,
)

__version__ = "0.1.0"


def case_study_path() -> str:
    """Filesystem path of the bundled case-study scenario."""
    return str(resources.files("semcast").joinpath("data/case_study.json"))
