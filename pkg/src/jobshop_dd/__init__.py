"""Job shop makespan minimization with decision diagrams, disjunctive graphs and classic heuristics."""

from jobshop_dd.instance import (
    Instance,
    InstanceFormatError,
    MissingPrerequisite,
    OperationId,
    Schedule,
    Violation,
    cost_from_partial,
    generate_random_instance,
    load_instance,
    parse_instance,
    schedule_from_order,
    trailer,
    validate_schedule,
    write_instance,
)

__version__ = "0.1.0"
