"""Makespan computation and minimization for flow shops with time windows,
modelled as switched max-plus linear-dual inequalities."""

from sldiflow.bakery import (
    BakeryConfig,
    BakeryModel,
    ConfigError,
    ProductIndexing,
    audit_trajectory,
    bakery_makespan,
    build_modes,
    build_sequence,
    index_products,
    full_scale_config,
    synthetic_config,
)
from sldiflow.block import BlockChain, InfeasibleChain, block_feasible, block_makespan, corner_blocks
from sldiflow.maxplus import (
    NEG_INF,
    POS_INF,
    DimensionError,
    InfeasibleCircuit,
    block_star,
    eps,
    format_matrix,
    identity,
    in_gamma,
    kleene_star,
    mat_dplus,
    mat_dtimes,
    mat_oplus,
    mat_otimes,
    parse_matrix,
    sharp,
    top,
)
from sldiflow.oracle import bf_longest_path, graph_makespan, oracle_makespan, to_graph
from sldiflow.search import (
    LimitExceeded,
    SearchResult,
    SegmentCache,
    build_cache,
    exhaustive_search,
    fast_makespan,
)
from sldiflow.sldi import (
    MakespanResult,
    ModeSpec,
    SldiInstance,
    Violation,
    Witness,
    assemble_Mv,
    check_trajectory,
    dense_makespan,
    reduce_mode,
)

__version__ = "0.1.0"
