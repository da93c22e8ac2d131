from jobshop_dd.heuristics.bottleneck import shifting_bottleneck
from jobshop_dd.heuristics.dispatch import FILTERS, RULES, dispatch, dispatch_order
from jobshop_dd.heuristics.one_machine import OneMachineProblem, carlier, lateness, solve_one_machine_lmax
