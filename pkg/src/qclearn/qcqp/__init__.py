"""Constrained quadratic maximization over Kraus stacks."""

from .adjust import (
    adjust_canonical,
    adjust_orthogonal,
    adjust_trace_preserving,
    adjust_with_external,
    orthonormalize_rows,
    remove_projections,
)
from .constraints import ConstraintSet, external, helper_constraints, plain_rows, superop_rows
from .multipliers import (
    LagrangeMultipliers,
    lagrange_multipliers,
    lambda_closed_form,
    residual,
    variation,
)
from .solver import (
    Solution,
    SolverConfig,
    constraint_violation,
    eig_step,
    reduced_problem,
    solve,
    write_trace_csv,
)
