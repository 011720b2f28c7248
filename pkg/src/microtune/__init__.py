"""microtune: grid/random-search latency optimizer for microservice configs.

The package is organized around the optimization pipeline: `space` defines the
bounded typed search space and its grid-index bijection, `tracing` the span
model and latency math, `simulate`/`external` the two evaluators, `engine` the
search loop, `store` persistence and reporting, `server` the HTTP control
plane, and `cli` the command-line entry point.
"""

from .engine import (
    ExternalEvaluator,
    GridStrategy,
    RandomStrategy,
    RunSpec,
    RunState,
    RunStatus,
    SimEvaluator,
    best_trial,
    execute_run,
    grid_candidates,
    improvement_percent,
    random_candidates,
    time_to_within,
)
from .space import (
    Configuration,
    Kind,
    ParameterSpec,
    RenderRule,
    SearchSpace,
    Target,
    cardinality,
    config_to_index,
    format_byte_size,
    index_to_config,
    parse_byte_size,
    parse_space,
    render,
)
from .simulate import Scenario, closed_form_latency, evaluate_sim, load_scenario, simulate_request
from .tracing import (
    LatencySample,
    MeasurementProtocol,
    Span,
    Trace,
    TrialStats,
    aggregate_samples,
    end_to_end_latency,
    per_service_latency,
)
from .trial import Trial, TrialStatus

__version__ = "0.1.0"
