"""annsim: round-limited cell-probe search in Hamming space.

A library and simulator for randomized approximate nearest neighbor search
under a probe-counting cost model with limited adaptivity: probes are issued
in at most k parallel batches, every cell read is charged, and all
randomness is a public coin shared between the querier and the virtual
tables. A brute-force oracle verifies every correctness condition the
guarantees rely on.
"""

from .alg_general import (
    GeneralParams,
    build_group_addresses,
    override_params,
    params_general,
    probe_bound_general,
    run_general,
)
from .alg_simple import SearchState, probe_bound_simple, run_simple, tau_simple
from .core import (
    Database,
    Params,
    Point,
    hamming_dist,
    load_database,
    save_database,
    scale_count,
)
from .errors import (
    AnnSimError,
    AssumptionViolated,
    ConfigError,
    DimensionMismatch,
    InvalidRoundBudget,
    RoundBudgetExceeded,
    SessionClosed,
)
from .harness import (
    DatasetSpec,
    ExperimentConfig,
    TrialRecord,
    calibrate,
    gen_database,
    run_experiment,
    selftest,
    summarize,
    write_csv,
)
from .near_search import NO, NearAnswer, near_scale, run_near
from .oracle import (
    ScaleSets,
    check_assumption1,
    check_assumption2,
    exact_nn,
    exact_sets,
    is_gamma_approx,
)
from .probe_engine import (
    ProbeSession,
    ProbeTranscript,
    close_session,
    open_session,
    probe_round,
)
from .randomness import PublicCoin, coin_for_trial
from .search_common import SearchTrace
from .sketch import (
    SketchMatrix,
    SketchVector,
    decision_threshold,
    delta_threshold,
    derive_matrix,
    row_collision_prob,
    sketch_apply,
)
from .tables import (
    EMPTY,
    AuxAddress,
    CellAddress,
    DataPoint,
    SmallInt,
    aux_cell,
    main_cell,
    membership_cell,
    table_metadata,
)

__version__ = "0.1.0"

__all__ = [
    "AnnSimError",
    "AssumptionViolated",
    "AuxAddress",
    "CellAddress",
    "ConfigError",
    "DataPoint",
    "Database",
    "DatasetSpec",
    "DimensionMismatch",
    "EMPTY",
    "ExperimentConfig",
    "GeneralParams",
    "InvalidRoundBudget",
    "NO",
    "NearAnswer",
    "Params",
    "Point",
    "ProbeSession",
    "ProbeTranscript",
    "PublicCoin",
    "RoundBudgetExceeded",
    "ScaleSets",
    "SearchState",
    "SearchTrace",
    "SessionClosed",
    "SketchMatrix",
    "SketchVector",
    "SmallInt",
    "TrialRecord",
    "aux_cell",
    "build_group_addresses",
    "calibrate",
    "check_assumption1",
    "check_assumption2",
    "close_session",
    "coin_for_trial",
    "decision_threshold",
    "delta_threshold",
    "derive_matrix",
    "exact_nn",
    "exact_sets",
    "gen_database",
    "hamming_dist",
    "is_gamma_approx",
    "load_database",
    "main_cell",
    "membership_cell",
    "near_scale",
    "open_session",
    "override_params",
    "params_general",
    "probe_bound_general",
    "probe_bound_simple",
    "probe_round",
    "run_experiment",
    "run_general",
    "run_near",
    "run_simple",
    "save_database",
    "scale_count",
    "selftest",
    "sketch_apply",
    "summarize",
    "table_metadata",
    "tau_simple",
    "write_csv",
]
