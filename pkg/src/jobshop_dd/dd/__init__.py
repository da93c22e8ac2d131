from jobshop_dd.dd.compile import (
    ExpansionResult,
    NodeCapExceeded,
    NodeStats,
    RelaxedResult,
    RestrictedResult,
    compile_relaxed,
    compile_restricted,
    full_expansion,
    relaxed_children,
    relaxed_dd,
    relaxed_to_row,
    row_to_relaxed,
    merge_rows,
    row_to_state,
    state_to_row,
)
from jobshop_dd.dd.search import SearchResult, a_star_search, dd_branch_and_bound
from jobshop_dd.dd.state import (
    StateM1,
    StateM2,
    StateRelax,
    TransitionError,
    feasible_ops,
    merge_all,
    merge_states,
    transition,
    transition_m1,
    transition_m2,
    transition_relaxed,
)
