"""(0,1) forms on product domains: construction, closedness, sup norms.

A one-form is a tuple of expression components f_1..f_n paired with dzbar_1..
dzbar_n.  Manufactured data comes from a potential u via f_j = d_bar(u, j),
which is closed by construction and makes u an exact solution for testing.
Sup norms are approximated by maxima over interior sample plans; boundary
behavior is probed separately by the verification module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import StarDomain
from .wirtinger_expr import Expr, d_bar, eval_expr


@dataclass(frozen=True)
class ProductDomain:
    """Ordered product of planar star-shaped factor domains."""

    factors: tuple[StarDomain, ...]

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ValidationError("a product domain needs at least one factor")

    @property
    def arity(self) -> int:
        return len(self.factors)

    def contains(self, point, margin: float = 0.0) -> bool:
        if len(point) != self.arity:
            raise ValidationError("point arity does not match the domain")
        return all(d.contains(z, margin) for d, z in zip(self.factors, point))


@dataclass(frozen=True)
class OneForm:
    """Components f_1..f_n of the form sum_j f_j dzbar_j."""

    arity: int
    components: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.components) != self.arity:
            raise ValidationError("need one component per variable")
        for j, comp in enumerate(self.components, start=1):
            if comp.max_var > self.arity:
                raise ValidationError(
                    f"component {j} uses z{comp.max_var} beyond arity {self.arity}"
                )

    def scaled(self, alpha: complex) -> "OneForm":
        from .wirtinger_expr import const, mul

        return OneForm(self.arity, tuple(mul(const(alpha), c) for c in self.components))


@dataclass(frozen=True)
class SamplePlan:
    """Interior evaluation points, with the margin they were drawn at."""

    points: tuple[tuple[complex, ...], ...]
    margin: float | None = None

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def sample(
        cls, domain: ProductDomain, count: int, margin: float, seed: int
    ) -> "SamplePlan":
        """Uniform rejection sampling inside the product, factor by factor.

        Deterministic for a fixed seed: the generator is consumed in a fixed
        order (point-major, factor-minor).
        """
        if count < 1:
            raise ValidationError("count must be positive")
        if margin < 0:
            raise ValidationError("margin must be non-negative")
        rng = np.random.default_rng(seed)
        points = []
        for _ in range(count):
            coords = []
            for d in domain.factors:
                radius = d.r_max
                for _ in range(10_000):
                    re, im = rng.uniform(-radius, radius, 2)
                    z = d.center + complex(re, im)
                    if d.contains(z, margin):
                        coords.append(z)
                        break
                else:
                    raise ValidationError(
                        f"rejection sampling failed; margin {margin} too large?"
                    )
            points.append(tuple(coords))
        return cls(tuple(points), margin)

    @classmethod
    def explicit(cls, points, margin: float | None = None) -> "SamplePlan":
        return cls(tuple(tuple(complex(z) for z in p) for p in points), margin)


def manufacture_form(u: Expr, n: int) -> OneForm:
    """The d-bar differential of the potential u: components f_j = d_bar(u, j)."""
    if u.max_var > n:
        raise ValidationError(f"potential uses z{u.max_var} beyond arity {n}")
    return OneForm(n, tuple(d_bar(u, j) for j in range(1, n + 1)))


def closedness_residual(f: OneForm, plan: SamplePlan) -> float:
    """max over sample points and pairs i<j of |d_bar_i f_j - d_bar_j f_i|."""
    worst = 0.0
    pairs = [
        (i, j, d_bar(f.components[j - 1], i), d_bar(f.components[i - 1], j))
        for i in range(1, f.arity + 1)
        for j in range(i + 1, f.arity + 1)
    ]
    for p in plan.points:
        if len(p) != f.arity:
            raise ValidationError("plan arity does not match the form")
        for _, _, dji, dij in pairs:
            worst = max(worst, abs(eval_expr(dji, p) - eval_expr(dij, p)))
    return worst


def sup_norm(f, plan: SamplePlan) -> float:
    """Max modulus over the plan; for a OneForm, also over components."""
    if isinstance(f, OneForm):
        exprs = f.components
    else:
        exprs = (f,)
    worst = 0.0
    for p in plan.points:
        for e in exprs:
            worst = max(worst, abs(eval_expr(e, p)))
    return worst
