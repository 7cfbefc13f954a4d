from .batch_tools import batch_problems_tool, handle_batch_problems
from .check_tools import check_problem_tool, handle_check_problem
from .norm_tools import compute_norms_tool, handle_compute_norms
from .solve_tools import (
    handle_refinement_study,
    handle_solve_problem,
    refinement_study_tool,
    solve_problem_tool,
)
from .transform_tools import handle_transform_problem, transform_problem_tool

# Export all tools definitions
TOOL_DEFINITIONS = [
    check_problem_tool(),
    solve_problem_tool(),
    compute_norms_tool(),
    transform_problem_tool(),
    refinement_study_tool(),
    batch_problems_tool(),
]

# Export all handlers
TOOL_HANDLERS = {
    "check_problem": handle_check_problem,
    "solve_problem": handle_solve_problem,
    "compute_norms": handle_compute_norms,
    "transform_problem": handle_transform_problem,
    "refinement_study": handle_refinement_study,
    "batch_problems": handle_batch_problems,
}
