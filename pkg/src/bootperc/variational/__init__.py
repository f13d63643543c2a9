"""Radial variational programs for the 2-D thresholds."""

from .discrete import (
    ConvergenceError,
    RadialProfile,
    VariationalSolution,
    build_program,
    eval_I,
    eval_q,
    feasibility_radius,
    radial_grid,
    solve_qmax,
    write_solution_json,
)
from .islands import (
    ELIsland,
    euler_lagrange_island,
    warmup_island_threshold,
    warmup_threshold_generic,
)
from .lower_bounds import LowerBoundError, appendixB_lower_bound, case1_threshold
from .tangency import discriminant_identity, tangency_checks
from .thresholds2d import (
    BracketError,
    f0stop_root,
    theta_islands,
    theta_local,
    theta_start,
    threshold_curves,
    write_curves_csv,
)
