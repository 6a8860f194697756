"""Selection of one SF per request under latency and capacity limits."""
from .model import (Assignment, InstanceError, SelectionInstance, assignment_from_vector,
                    build_instance, verify_assignment)
from .solvers import (BRUTE_FORCE_CAP, DEFAULT_BUDGET, Budget, brute_force, solve_baseline,
                      solve_exact, solve_greedy)

__all__ = [
    "Assignment", "InstanceError", "SelectionInstance", "assignment_from_vector",
    "build_instance", "verify_assignment", "BRUTE_FORCE_CAP", "DEFAULT_BUDGET", "Budget",
    "brute_force", "solve_baseline", "solve_exact", "solve_greedy",
]
