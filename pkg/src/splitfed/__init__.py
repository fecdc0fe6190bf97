"""Communication cost model and deterministic protocol simulator for
split learning versus federated averaging."""

from .cost_model import (
    BreakEvenCurve,
    CommReport,
    EfficiencyReport,
    Method,
    ScenarioParams,
    SweepRow,
    Winner,
    break_even_curve,
    break_even_model_size,
    efficiency_ratio,
    federated_comm,
    shard_sizes,
    split_comm_nosync,
    split_comm_sync,
    sweep,
)
from .errors import (
    CutOutOfRange,
    DivisibilityError,
    EmptyList,
    InvalidParam,
    LengthMismatch,
    ScenarioError,
    ShapeMismatch,
    SplitFedError,
)
from .nn_core import (
    Activation,
    BackwardResult,
    CutPoint,
    ForwardTrace,
    ModelSpec,
    average_params,
    backward,
    cut_stats,
    forward,
    forward_back,
    forward_front,
    init_params,
    param_count,
    random_dataset,
    sgd_step,
    split_params,
    splitmix64,
)
from .protocol_sim import (
    FederatedRunResult,
    Message,
    MessageKind,
    ShardedDataset,
    SplitRunResult,
    SplitVariant,
    TrafficLedger,
    VerificationReport,
    measured_comm,
    partition_dataset,
    run_federated_training,
    run_split_training,
    verify_against_model,
)
from .scenarios import Scenario, load_scenario, load_suite, parse_scenario_text

__version__ = "0.1.0"
