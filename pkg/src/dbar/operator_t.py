"""Solution operator on product domains via nested slice transforms.

The operator applies the one-variable solid Cauchy transform along single
coordinates ("slice transforms"), composes them over index sets, and combines
the compositions with alternating signs against symbolically differentiated
components.  Evaluation is pointwise; nesting is evaluated innermost-first
with the inner transform vectorized over the outer quadrature nodes, which
keeps the double composition a single matrix pass.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import cauchy1d
from .cauchy1d import (
    DEFAULT_FD_STEP,
    DEFAULT_MARGIN,
    PoleMoments,
    dbar_from_stencil,
    dz_from_stencil,
    stencil_points,
    transform_rows,
)
from .errors import ValidationError
from .forms import OneForm, ProductDomain, SamplePlan
from .geometry import AreaRule, BoundaryRule, area_rule, boundary_rule
from .wirtinger_expr import Expr, d_bar, eval_expr

MAX_NESTING = 3


def _broadcast_int(value, n: int, name: str) -> tuple[int, ...]:
    if isinstance(value, int):
        return (value,) * n
    value = tuple(int(v) for v in value)
    if len(value) != n:
        raise ValidationError(f"{name} needs one entry per factor, got {len(value)}")
    return value


@dataclass(frozen=True)
class QuadratureSuite:
    """Per-factor area and boundary rules over a product domain."""

    domain: ProductDomain
    area: tuple[AreaRule, ...]
    boundary: tuple[BoundaryRule, ...]

    @property
    def arity(self) -> int:
        return self.domain.arity

    @classmethod
    def build(cls, domain: ProductDomain, nr, ntheta, nboundary=None) -> "QuadratureSuite":
        n = domain.arity
        nrs = _broadcast_int(nr, n, "nr")
        nts = _broadcast_int(ntheta, n, "ntheta")
        if nboundary is None:
            nbs = tuple(max(256, 4 * nt) for nt in nts)
        else:
            nbs = _broadcast_int(nboundary, n, "nboundary")
        areas = tuple(area_rule(d, r, t) for d, r, t in zip(domain.factors, nrs, nts))
        bnds = tuple(boundary_rule(d, b) for d, b in zip(domain.factors, nbs))
        return cls(domain, areas, bnds)

    def sizes(self) -> dict:
        return {
            "nr": [a.nr for a in self.area],
            "ntheta": [a.ntheta for a in self.area],
            "nboundary": [b.ntheta for b in self.boundary],
        }


@dataclass(frozen=True)
class TermBreakdown:
    """One summand of the solve: indices, sign, and the derivative stack
    (component index plus the variables differentiated against)."""

    indices: tuple[int, ...]
    sign: int
    component: int
    stack: tuple[int, ...]
    value: complex


@dataclass
class SolveReportEntry:
    point: tuple[complex, ...]
    value: complex
    terms: list[TermBreakdown] = field(default_factory=list)
    operator: str = "t"
    closedness_residual: float | None = None
    closed: bool | None = None
    elapsed: float = 0.0


def _point_with(z, k: int, w):
    return tuple(w if j == k - 1 else z[j] for j in range(len(z)))


def _validate_index_set(I, n: int) -> tuple[int, ...]:
    I = tuple(int(i) for i in I)
    if not I or any(a >= b for a, b in zip(I, I[1:])) or I[0] < 1 or I[-1] > n:
        raise ValidationError(f"index set {I} must be strictly increasing within 1..{n}")
    return I


def slice_transform(
    k: int,
    g: Expr,
    z,
    suite: QuadratureSuite,
    margin: float = DEFAULT_MARGIN,
    fd_step: float = DEFAULT_FD_STEP,
) -> complex:
    """One-variable solid Cauchy transform in coordinate k, others frozen at z."""
    n = suite.arity
    if not (1 <= k <= n):
        raise ValidationError(f"slice index {k} outside 1..{n}")
    d = suite.domain.factors[k - 1]

    def density(w):
        return eval_expr(g, _point_with(z, k, w))

    return cauchy1d.cauchy_transform(
        d, density, z[k - 1], suite.area[k - 1], suite.boundary[k - 1], margin, fd_step
    )


def _finish_outer(values, z_k, d, arule, brule, margin, fd_step):
    """Assemble the outer subtracted transform from density values computed at
    [area nodes..., z_k, four stencil points]."""
    nn = arule.nodes.size
    vals = values[:nn]
    at_z = values[nn]
    dbar_z = dbar_from_stencil(values[nn + 1 :], fd_step)
    dz_z = dz_from_stencil(values[nn + 1 :], fd_step)
    moments = PoleMoments(d, z_k, brule, margin)
    out = transform_rows(
        vals[None, :],
        np.array([at_z]),
        np.array([dbar_z]),
        np.array([dz_z]),
        z_k,
        arule,
        moments,
    )
    return complex(out[0])


def _outer_eval_points(z_k: complex, arule: AreaRule, fd_step: float) -> np.ndarray:
    return np.concatenate([arule.nodes, [z_k], stencil_points(z_k, fd_step)])


def _double_slice(k1, k2, g, z, suite, margin, fd_step):
    """Two-level composition: transform in k2 vectorized over the k1 points."""
    d1 = suite.domain.factors[k1 - 1]
    a1, b1 = suite.area[k1 - 1], suite.boundary[k1 - 1]
    d2 = suite.domain.factors[k2 - 1]
    a2, b2 = suite.area[k2 - 1], suite.boundary[k2 - 1]
    cauchy1d.require_interior(d1, z[k1 - 1], margin)
    cauchy1d.require_interior(d2, z[k2 - 1], margin)

    outer = _outer_eval_points(z[k1 - 1], a1, fd_step)
    inner_pts = _outer_eval_points(z[k2 - 1], a2, fd_step)

    point = list(z)
    point[k1 - 1] = outer[:, None]
    point[k2 - 1] = inner_pts[None, :]
    V = np.asarray(eval_expr(g, tuple(point)))
    if V.shape != (outer.size, inner_pts.size):
        V = np.broadcast_to(V, (outer.size, inner_pts.size))

    nn2 = a2.nodes.size
    at_z2 = V[:, nn2]
    dbar_z2 = dbar_from_stencil(V[:, nn2 + 1 :], fd_step)
    dz_z2 = dz_from_stencil(V[:, nn2 + 1 :], fd_step)
    moments = PoleMoments(d2, z[k2 - 1], b2, margin)
    F = transform_rows(V[:, :nn2], at_z2, dbar_z2, dz_z2, z[k2 - 1], a2, moments)
    return _finish_outer(F, z[k1 - 1], d1, a1, b1, margin, fd_step)


def iterated_slice(
    I,
    g: Expr,
    z,
    suite: QuadratureSuite,
    margin: float = DEFAULT_MARGIN,
    fd_step: float = DEFAULT_FD_STEP,
    allow_deep: bool = False,
) -> complex:
    """Composition of slice transforms over the index set I applied to g.

    The composition order is immaterial up to quadrature error (the slices
    commute); the cost grows with the product of the node counts, so depth
    beyond MAX_NESTING requires allow_deep.
    """
    I = _validate_index_set(I, suite.arity)
    if len(I) > MAX_NESTING and not allow_deep:
        raise ValidationError(
            f"nesting depth {len(I)} exceeds {MAX_NESTING}; pass allow_deep to override"
        )
    return _iterated(I, g, tuple(z), suite, margin, fd_step)


def _iterated(I, g, z, suite, margin, fd_step):
    if len(I) == 1:
        return slice_transform(I[0], g, z, suite, margin, fd_step)
    if len(I) == 2:
        return _double_slice(I[0], I[1], g, z, suite, margin, fd_step)
    k1 = I[0]
    d1 = suite.domain.factors[k1 - 1]
    a1, b1 = suite.area[k1 - 1], suite.boundary[k1 - 1]
    cauchy1d.require_interior(d1, z[k1 - 1], margin)
    pts = _outer_eval_points(z[k1 - 1], a1, fd_step)
    F = np.array(
        [_iterated(I[1:], g, _point_with(z, k1, w), suite, margin, fd_step) for w in pts]
    )
    return _finish_outer(F, z[k1 - 1], d1, a1, b1, margin, fd_step)


def _derivative_stacks(f: OneForm, n: int) -> dict[tuple[int, ...], Expr]:
    """Derivative stack per index set: the last index picks the component, the
    leading ones the conjugate derivatives."""
    stacks: dict[tuple[int, ...], Expr] = {}
    cache: dict[tuple[int, tuple[int, ...]], Expr] = {}
    for s in range(1, n + 1):
        for I in combinations(range(1, n + 1), s):
            comp = I[-1]
            expr = f.components[comp - 1]
            prefix: tuple[int, ...] = ()
            for j in I[:-1]:
                prefix = prefix + (j,)
                key = (comp, prefix)
                if key not in cache:
                    cache[key] = d_bar(expr, j)
                expr = cache[key]
            stacks[I] = expr
    return stacks


def solve_t(
    f: OneForm,
    z,
    suite: QuadratureSuite,
    margin: float = DEFAULT_MARGIN,
    fd_step: float = DEFAULT_FD_STEP,
    allow_deep: bool = False,
) -> SolveReportEntry:
    """Full alternating sum over index sets; returns value plus breakdown."""
    n = suite.arity
    if f.arity != n:
        raise ValidationError(f"form arity {f.arity} does not match domain arity {n}")
    if n > MAX_NESTING and not allow_deep:
        raise ValidationError(f"arity {n} exceeds the cost guard; pass allow_deep")
    start = time.perf_counter()
    z = tuple(complex(w) for w in z)
    stacks = _derivative_stacks(f, n)
    terms = []
    total = 0j
    for s in range(1, n + 1):
        sign = (-1) ** (s - 1)
        for I in combinations(range(1, n + 1), s):
            val = _iterated(I, stacks[I], z, suite, margin, fd_step)
            terms.append(TermBreakdown(I, sign, I[-1], I[:-1], val))
            total += sign * val
    return SolveReportEntry(
        point=z,
        value=total,
        terms=terms,
        operator="t",
        elapsed=time.perf_counter() - start,
    )


def solve_t_at(
    f: OneForm,
    points,
    suite: QuadratureSuite,
    margin: float = DEFAULT_MARGIN,
    fd_step: float = DEFAULT_FD_STEP,
    allow_deep: bool = False,
) -> list[SolveReportEntry]:
    """solve_t over many points, optionally in parallel (DBAR_THREADS)."""
    workers = int(os.environ.get("DBAR_THREADS", "1") or "1")

    def one(p):
        return solve_t(f, p, suite, margin, fd_step, allow_deep)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, points))
    return [one(p) for p in points]


def residual_dbar(f: OneForm, solver, plan: SamplePlan, h: float = 1e-4) -> float:
    """Max over plan points and components of |FD d-bar of solver - f_k|.

    The solver maps a full point to a complex value; the stencil is the
    central Wirtinger one with step h per coordinate.
    """
    if plan.margin is not None and plan.margin < 10 * h:
        raise ValidationError(
            f"plan margin {plan.margin} too small for FD step {h} (need >= 10h)"
        )
    worst = 0.0
    for p in plan.points:
        for k in range(1, f.arity + 1):
            def along(w):
                return solver(_point_with(p, k, w))

            fd = cauchy1d.dbar_fd(along, p[k - 1], h)
            worst = max(worst, abs(fd - eval_expr(f.components[k - 1], p)))
    return worst
