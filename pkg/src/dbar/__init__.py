"""Integral solution operators for the inhomogeneous Cauchy-Riemann
equations on products of planar domains, with a verification harness."""

from .errors import (
    ExprSyntaxError,
    NearSingularityError,
    NumericsError,
    ValidationError,
)
from .forms import (
    OneForm,
    ProductDomain,
    SamplePlan,
    closedness_residual,
    manufacture_form,
    sup_norm,
)
from .geometry import (
    AreaRule,
    BoundaryRule,
    StarDomain,
    area_exact,
    area_rule,
    boundary_rule,
    contains,
    make_disk,
    make_ellipse,
)
from .cauchy1d import boundary_cauchy, cauchy_transform, singular_moment
from .kernel_algebra import (
    ExponentChoice,
    big_g,
    decompose_inverse_product,
    exponent_choice,
    hm_bound,
    kernel_g,
    kernel_g_derivative,
    weighted_bound,
)
from .operator_t import (
    QuadratureSuite,
    SolveReportEntry,
    iterated_slice,
    residual_dbar,
    slice_transform,
    solve_t,
    solve_t_at,
)
from .operator_ttilde import solve_ttilde, t_bracket, ttilde_dim2_explicit
from .wirtinger_expr import Expr, d_bar, d_z, eval_expr, evaluate, parse

__version__ = "0.1.0"
