"""shiftheat: solvers for a heat equation with time-shift nonlocal boundary conditions.

The package realizes two analytic solution paths for the mixed problem

    a(x) u_xx + b(x) u_x + c(x) u = u_t            on (0,1) x (0, inf)
    u(x, 0) = phi(x)
    u(x, t+omega) + delta0 u(1-x, t)     = 0  at x=0,  t > 0
    u(x, t)       + delta1 u(1-x, t+omega) = 0  at x=0,  t > 0
    alpha0 u(x,t) + beta0 u(1-x,t)       = 0  at x=0,  0 < t <= omega
    alpha1 u_x(x,t) + beta1 u_x(1-x,t)   = 0  at x=0,  0 < t <= omega

a residue series over the eigenvalues of the associated spectral problem and
a contour-integral representation built from two Green's functions, plus an
independent Crank-Nicolson oracle for verification.
"""

from .exprcore import parse_expr, eval_expr, diff_expr
from .problem import ProblemSpec, ValidationReport, validate, compatibility_residuals
from .odeint import fundamental_pair, wkb_matrix, wkb_branches, MU_MAX
from .green import char_det, green_kernel, apply_kernel, q_function
from .spectrum import locate_eigenvalues, asymptotic_seed, multiplicity
from .contours import build_contour, contour_quadrature, integrate, truncation_radius
from .solver_residue import (a_operator, expansion_partial_sum, solve_residue,
                             boundary_trace, SolutionGrid)
from .solver_contour import extend_traces, laplace_transforms, pq_values, solve_contour
from .oracle import fd_solve, compare_grids, pde_residual
from .util import (SolverError, SingularParameterError, GeometryError,
                   BudgetExhaustedError, NonFiniteIntegrandError)

__version__ = "0.1.0"
