"""Numerical probes: uniform-bound checks, the iterated Stokes identity,
sup-norm ratio studies, and convergence studies.

The bound probes evaluate weakly singular integrals with target-centered
polar rules (graded radially, clipped by the containment test) at the ~1%
accuracy appropriate for no-blow-up checks; they are deliberately separate
from the production quadrature.  The Stokes identity is checked on smooth
integrands only: both sides are straight tensor quadratures with symbolic
derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ValidationError
from .forms import OneForm, ProductDomain, SamplePlan, manufacture_form, sup_norm
from .geometry import StarDomain
from .operator_t import QuadratureSuite, residual_dbar, solve_t
from .wirtinger_expr import Expr, const, d_bar, eval_expr, mul, parse

TWO_PI = 2.0 * np.pi


def lemma_bound_area(d: StarDomain, alpha: float, z_list, nr: int = 160, ntheta: int = 320):
    """Values of the weakly singular area integrals 2*int dA/|zeta-z|^alpha.

    Target-centered polar coordinates absorb the singularity (the radial
    integrand is r^(1-alpha), tamed by a power-law grading); nodes outside
    the domain are dropped by indicator weighting.
    """
    if not alpha < 2:
        raise ValidationError(f"area bound probe requires alpha < 2, got {alpha}")
    out = []
    x, wq = np.polynomial.legendre.leggauss(nr)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * wq
    grade = 8
    theta = np.arange(ntheta) * (TWO_PI / ntheta)
    for z in z_list:
        z = complex(z)
        if not d.contains(z, 0.0):
            raise ValidationError(f"probe point {z} lies outside the domain")
        reach = abs(z - d.center) + d.r_max
        r = reach * t**grade
        # weight: r^(1-alpha) dr with dr = reach * grade * t^(grade-1) dt
        wr = wt * reach * grade * t ** (grade - 1) * r ** (1.0 - alpha)
        nodes = z + r[:, None] * np.exp(1j * theta)[None, :]
        inside = d.contains_many(nodes, 0.0)
        val = 2.0 * (wr[:, None] * inside).sum() * (TWO_PI / ntheta)
        out.append(float(val))
    return out


def lemma_bound_boundary(
    d: StarDomain, alpha: float, z_list, base_n: int = 512, cap: int = 1 << 18
):
    """Values of int |dzeta| / |zeta-z|^alpha over the boundary.

    The node count scales like 1/dist(z, boundary) so the near-singular peak
    stays resolved as probes approach the boundary.
    """
    if not alpha < 1:
        raise ValidationError(f"boundary bound probe requires alpha < 1, got {alpha}")
    out = []
    for z in z_list:
        z = complex(z)
        if not d.contains(z, 0.0):
            raise ValidationError(f"probe point {z} lies outside the domain")
        dist = _boundary_distance(d, z)
        n = min(cap, int(base_n * max(1.0, 0.05 / dist)))
        theta = np.arange(n) * (TWO_PI / n)
        r = d.radius(theta)
        dr = d.radius_deriv(theta)
        nodes = d.center + r * np.exp(1j * theta)
        speed = np.hypot(dr, r) * (TWO_PI / n)
        val = (speed / np.abs(nodes - z) ** alpha).sum()
        out.append(float(val))
    return out


def _boundary_distance(d: StarDomain, z: complex, probes: int = 2048) -> float:
    theta = np.arange(probes) * (TWO_PI / probes)
    bdry = d.center + d.radius(theta) * np.exp(1j * theta)
    return float(np.abs(bdry - z).min())


def _mixed_tensor_integral(
    omega: ProductDomain,
    suite: QuadratureSuite,
    solid_idx: tuple[int, ...],
    integrand: Expr,
    chunk: int = 1 << 21,
) -> complex:
    """Tensor quadrature over solid factors (dzbar^dz) for solid_idx and
    counterclockwise boundary contours for the remaining factors."""
    n = omega.arity
    factors = []
    for j in range(1, n + 1):
        if j in solid_idx:
            rule = suite.area[j - 1]
            factors.append((rule.nodes, 2j * rule.weights))
        else:
            rule = suite.boundary[j - 1]
            factors.append((rule.nodes, rule.tangents))
    sizes = [nodes.size for nodes, _ in factors]
    total_rows = int(np.prod(sizes[:-1])) if n > 1 else 1
    trail_nodes, trail_w = factors[-1]
    total = 0j
    step = max(1, chunk // trail_nodes.size)
    for lo in range(0, total_rows, step):
        hi = min(total_rows, lo + step)
        flat = np.arange(lo, hi)
        idx = np.unravel_index(flat, sizes[:-1]) if n > 1 else ()
        point = []
        wlead = np.ones(hi - lo, dtype=complex)
        for (nodes, w), ix in zip(factors[:-1], idx):
            point.append(nodes[ix][:, None])
            wlead = wlead * w[ix]
        point.append(trail_nodes[None, :])
        vals = np.asarray(eval_expr(integrand, tuple(point)))
        if vals.shape != (hi - lo, trail_nodes.size):
            vals = np.broadcast_to(vals, (hi - lo, trail_nodes.size))
        total = total + (wlead[:, None] * vals * trail_w[None, :]).sum()
    return complex(total)


def stokes_check(f: Expr, g: Expr, omega: ProductDomain, suite: QuadratureSuite):
    """Both sides of the iterated Stokes identity for smooth f and g.

    Left: the full conjugate derivative of f against g over all solid
    factors.  Right: the alternating sum over subsets of solid factors of f
    against the correspondingly differentiated g, boundaries elsewhere.
    Returns (lhs, rhs, |lhs - rhs|).
    """
    n = omega.arity
    if n > 3:
        raise ValidationError("Stokes check is cost-guarded to three factors")
    if max(f.max_var, g.max_var) > n:
        raise ValidationError("integrand arity exceeds the domain arity")
    df = f
    for j in range(1, n + 1):
        df = d_bar(df, j)
    lhs = _mixed_tensor_integral(omega, suite, tuple(range(1, n + 1)), mul(df, g))
    rhs = 0j
    for m in range(0, n + 1):
        for solid in combinations(range(1, n + 1), m):
            dg = g
            for j in solid:
                dg = d_bar(dg, j)
            rhs += (-1) ** m * _mixed_tensor_integral(omega, suite, solid, mul(f, dg))
    return lhs, rhs, abs(lhs - rhs)


@dataclass
class SupnormRow:
    label: str
    sup_f: float
    sup_tf: float
    ratio: float | None


def supnorm_study(
    catalog: list[tuple[str, OneForm]],
    omega: ProductDomain,
    suite: QuadratureSuite,
    plan: SamplePlan,
    solver=None,
) -> list[SupnormRow]:
    """Sup norms of inputs and solutions over the plan, with their ratios.

    Zero forms are reported with a null ratio rather than dropped, so the
    table rows stay aligned with the catalog.
    """
    if not catalog:
        raise ValidationError("catalog must be non-empty")
    rows = []
    for label, form in catalog:
        sup_f = sup_norm(form, plan)
        values = []
        for p in plan.points:
            if solver is None:
                values.append(solve_t(form, p, suite).value)
            else:
                values.append(solver(form, p, suite))
        sup_tf = max(abs(v) for v in values)
        ratio = sup_tf / sup_f if sup_f > 0 else None
        rows.append(SupnormRow(label, sup_f, sup_tf, ratio))
    return rows


def default_form_catalog(n: int = 2) -> list[tuple[str, OneForm]]:
    """Twenty manufactured closed forms whose sup norms span four decades."""
    shapes = [
        "conj(z1)*conj(z2)",
        "conj(z1)^2 + conj(z2)^2",
        "exp(conj(z1))*conj(z2)",
        "sin(conj(z1)) + cos(conj(z2))*conj(z1)",
    ]
    scales = [1e-2, 1e-1, 1.0, 1e1, 1e2]
    catalog = []
    for shape in shapes:
        u = parse(shape, n)
        for scale in scales:
            form = manufacture_form(mul(const(scale), u), n)
            catalog.append((f"{scale:g}*({shape})", form))
    return catalog


@dataclass
class ConvergenceRow:
    nr: int
    ntheta: int
    max_error: float
    residual: float


def convergence_study(
    u: Expr,
    omega: ProductDomain,
    suites: list[QuadratureSuite],
    plan: SamplePlan,
    fd_step: float = 1e-4,
) -> list[ConvergenceRow]:
    """Errors against the manufactured reference and FD residuals per suite.

    The reference is the potential u itself; on domains where the operator
    picks a different solution the error column measures that offset while
    the residual column still has to vanish.
    """
    f = manufacture_form(u, omega.arity)
    rows = []
    for suite in suites:
        max_err = 0.0
        for p in plan.points:
            got = solve_t(f, p, suite).value
            max_err = max(max_err, abs(got - eval_expr(u, p)))
        res = residual_dbar(f, lambda p: solve_t(f, p, suite).value, plan, fd_step)
        rows.append(
            ConvergenceRow(suite.area[0].nr, suite.area[0].ntheta, max_err, res)
        )
    return rows
