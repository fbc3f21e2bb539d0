"""One-variable solid Cauchy transform and boundary Cauchy integrals.

The solid transform is computed by singularity subtraction: the density's
full first-order model at the target (value plus both Wirtinger-linear
terms) is removed from the integrand and added back through moments known in
closed or boundary-reduced form, so the quadrature only ever sees a remainder
vanishing linearly at the pole.  The moments hit spectral accuracy on the
smooth boundaries used here, which makes the transform exact (up to the
boundary rule) for densities affine in zeta and conj(zeta); that exactness is
what keeps nested transforms accurate.
"""

from __future__ import annotations

import numpy as np

from .errors import NearSingularityError, NumericsError
from .geometry import AreaRule, BoundaryRule, StarDomain, area_exact

DEFAULT_MARGIN = 1e-3
DEFAULT_FD_STEP = 1e-5


def require_interior(d: StarDomain, z: complex, margin: float) -> None:
    if not d.contains(z, margin):
        raise NearSingularityError(
            f"evaluation point {z} is within {margin} of the boundary (or outside)"
        )


def _as_values(f, nodes: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(nodes))
    if vals.shape != nodes.shape:
        vals = np.broadcast_to(vals, nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericsError("density produced non-finite values on quadrature nodes")
    return vals


def boundary_cauchy(
    d: StarDomain,
    g,
    z: complex,
    rule: BoundaryRule,
    margin: float = DEFAULT_MARGIN,
) -> complex:
    """(1/2pi i) * contour integral of g(zeta)/(zeta - z) over the boundary."""
    require_interior(d, z, margin)
    vals = _as_values(g, rule.nodes)
    return complex(np.sum(vals * rule.tangents / (rule.nodes - z)) / (2j * np.pi))


def singular_moment(
    d: StarDomain,
    z: complex,
    rule: BoundaryRule,
    margin: float = DEFAULT_MARGIN,
) -> complex:
    """Solid integral of dzbar^dz / (zeta - z), reduced to the boundary.

    The reduction uses the potential conj(zeta - z), whose d-bar derivative is
    one; the boundary Cauchy integral of the conjugate then carries all the
    singular mass.
    """
    bc = boundary_cauchy(d, np.conjugate, z, rule, margin)
    return 2j * np.pi * (bc - np.conjugate(complex(z)))


def conjugate_moment(
    d: StarDomain,
    z: complex,
    rule: BoundaryRule,
    margin: float = DEFAULT_MARGIN,
) -> complex:
    """Solid integral of conj(zeta-z)/(zeta-z) dzbar^dz, boundary-reduced.

    Potential: conj(zeta - z)^2 / 2.
    """
    require_interior(d, z, margin)
    off = rule.nodes - z
    return complex(0.5 * np.sum(np.conjugate(off) ** 2 * rule.tangents / off))


def dbar_fd(fn, z: complex, h: float = DEFAULT_FD_STEP) -> complex:
    """Central Wirtinger stencil for df/dzbar = (df/dx + i df/dy)/2."""
    fx = (fn(z + h) - fn(z - h)) / (2.0 * h)
    fy = (fn(z + 1j * h) - fn(z - 1j * h)) / (2.0 * h)
    return complex(0.5 * (fx + 1j * fy))


def dz_fd(fn, z: complex, h: float = DEFAULT_FD_STEP) -> complex:
    """Central Wirtinger stencil for df/dz = (df/dx - i df/dy)/2."""
    fx = (fn(z + h) - fn(z - h)) / (2.0 * h)
    fy = (fn(z + 1j * h) - fn(z - 1j * h)) / (2.0 * h)
    return complex(0.5 * (fx - 1j * fy))


def stencil_points(z: complex, h: float) -> np.ndarray:
    """The four probe points used by the central Wirtinger stencils."""
    return np.array([z + h, z - h, z + 1j * h, z - 1j * h])


def dbar_from_stencil(vals, h: float):
    """Wirtinger d-bar from values at stencil_points; vectorized over rows."""
    vals = np.asarray(vals)
    fx = (vals[..., 0] - vals[..., 1]) / (2.0 * h)
    fy = (vals[..., 2] - vals[..., 3]) / (2.0 * h)
    return 0.5 * (fx + 1j * fy)


def dz_from_stencil(vals, h: float):
    """Wirtinger d-z from values at stencil_points; vectorized over rows."""
    vals = np.asarray(vals)
    fx = (vals[..., 0] - vals[..., 1]) / (2.0 * h)
    fy = (vals[..., 2] - vals[..., 3]) / (2.0 * h)
    return 0.5 * (fx - 1j * fy)


class PoleMoments:
    """The three moments needed by the subtracted pole quadrature at a target:
    m0 for the constant term, m1 for the conjugate-linear term, and marea
    (2i * exact area) for the holomorphic-linear term."""

    __slots__ = ("m0", "m1", "marea")

    def __init__(self, d: StarDomain, z: complex, brule: BoundaryRule, margin: float):
        self.m0 = singular_moment(d, z, brule, margin)
        self.m1 = conjugate_moment(d, z, brule, margin)
        self.marea = 2j * area_exact(d)


def transform_rows(
    vals: np.ndarray,
    at_z: np.ndarray,
    dbar_at_z: np.ndarray,
    dz_at_z: np.ndarray,
    z: complex,
    arule: AreaRule,
    moments: PoleMoments,
) -> np.ndarray:
    """Subtracted solid Cauchy transform for a batch of densities at one target.

    vals[b, q] holds density b on the area nodes; at_z, dbar_at_z and dz_at_z
    hold the density values and Wirtinger derivatives at the target z.
    Returns the batch of transform values.
    """
    return -pole_quadrature_rows(vals, at_z, dbar_at_z, dz_at_z, z, arule, moments) / (
        2j * np.pi
    )


def pole_quadrature_rows(
    vals: np.ndarray,
    at_z: np.ndarray,
    dbar_at_z: np.ndarray,
    dz_at_z: np.ndarray,
    z: complex,
    arule: AreaRule,
    moments: PoleMoments,
) -> np.ndarray:
    """Raw subtracted quadrature of vals/(zeta - z) dzbar^dz per batch row.

    Subtracts the first-order model at_z + dbar*conj(off) + dz*off and adds it
    back through the exact moments, leaving a remainder that vanishes at the
    pole.
    """
    off = arule.nodes - z
    model = (
        at_z[:, None]
        + dbar_at_z[:, None] * np.conjugate(off)[None, :]
        + dz_at_z[:, None] * off[None, :]
    )
    rem = (vals - model) / off[None, :]
    total = (rem * (2j * arule.weights)[None, :]).sum(axis=1)
    return total + at_z * moments.m0 + dbar_at_z * moments.m1 + dz_at_z * moments.marea


def cauchy_transform(
    d: StarDomain,
    f,
    z: complex,
    arule: AreaRule,
    brule: BoundaryRule,
    margin: float = DEFAULT_MARGIN,
    fd_step: float = DEFAULT_FD_STEP,
) -> complex:
    """Solid Cauchy transform -(1/2pi i) * integral of f(zeta)/(zeta-z) dzbar^dz.

    The classical right inverse of d-bar in one variable: for continuous f the
    result u satisfies du/dzbar = f inside the domain.
    """
    require_interior(d, z, margin)
    z = complex(z)
    vals = _as_values(f, arule.nodes)
    fz = complex(f(z))
    if not np.isfinite([fz.real, fz.imag]).all():
        raise NumericsError(f"density is non-finite at the evaluation point {z}")
    stencil_vals = np.array([complex(f(w)) for w in stencil_points(z, fd_step)])
    fzbar = dbar_from_stencil(stencil_vals, fd_step)
    fzh = dz_from_stencil(stencil_vals, fd_step)
    moments = PoleMoments(d, z, brule, margin)
    out = transform_rows(
        vals[None, :],
        np.array([fz]),
        np.array([fzbar]),
        np.array([fzh]),
        z,
        arule,
        moments,
    )
    return complex(out[0])
