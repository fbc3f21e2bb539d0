"""Star-shaped planar domains and their area/boundary quadrature rules.

A domain is star-shaped about a center point; the boundary radius is a
truncated Fourier series r(theta) = a0 + sum_k (a_k cos k*theta + b_k sin
k*theta), which keeps containment tests and quadrature generation in closed
form.  Area rules pair Gauss-Legendre nodes in the scaled radius with a
uniform angular grid (the trapezoid rule, spectrally accurate for periodic
smooth integrands); boundary rules are trapezoid rules in the angular
parameter, oriented counterclockwise.  The orientation convention throughout
the package is dzbar ^ dz = 2i dA with counterclockwise boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * math.pi

# Dense angular grid used for positivity checks and radius bounds.
_PROBE_THETA = np.linspace(0.0, TWO_PI, 4096, endpoint=False)


@lru_cache(maxsize=None)
def _gauss_legendre_01(n: int):
    """Gauss-Legendre nodes/weights transplanted to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class StarDomain:
    """Bounded planar domain star-shaped about ``center``.

    ``cos_coeffs``/``sin_coeffs`` hold (a_1..a_K) and (b_1..b_K); ``a0`` is the
    mean radius.  The radial function must stay strictly positive, which is
    checked on a dense angular grid at construction.
    """

    center: complex
    a0: float
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.cos_coeffs) != len(self.sin_coeffs):
            raise ValidationError("cos/sin coefficient lists must have equal length")
        values = (self.a0, *self.cos_coeffs, *self.sin_coeffs, self.center.real, self.center.imag)
        if not all(math.isfinite(v) for v in values):
            raise ValidationError("domain coefficients must be finite")
        if self.r_min <= 0.0:
            raise ValidationError(
                f"radial function must be positive (min {self.r_min:.3e} on probe grid)"
            )

    @classmethod
    def from_coeffs(cls, center: complex, coeffs) -> "StarDomain":
        """Build from the flat form [a0, (a1, b1), (a2, b2), ...]."""
        if not coeffs:
            raise ValidationError("coefficient list must start with a0")
        a0 = float(coeffs[0])
        pairs = [(float(a), float(b)) for a, b in coeffs[1:]]
        cos_c = tuple(a for a, _ in pairs)
        sin_c = tuple(b for _, b in pairs)
        return cls(complex(center), a0, cos_c, sin_c)

    def radius(self, theta):
        """r(theta), vectorized."""
        theta = np.asarray(theta, dtype=float)
        r = np.full(theta.shape, self.a0)
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            r = r + a * np.cos(k * theta) + b * np.sin(k * theta)
        return r

    def radius_deriv(self, theta):
        """dr/dtheta, vectorized."""
        theta = np.asarray(theta, dtype=float)
        dr = np.zeros(theta.shape)
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            dr = dr + k * (-a * np.sin(k * theta) + b * np.cos(k * theta))
        return dr

    @cached_property
    def r_min(self) -> float:
        return float(np.min(self.radius(_PROBE_THETA)))

    @cached_property
    def r_max(self) -> float:
        return float(np.max(self.radius(_PROBE_THETA)))

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        """True iff |z - center| <= r(arg(z - center)) - margin."""
        off = complex(z) - self.center
        rho = abs(off)
        theta = math.atan2(off.imag, off.real)
        return rho <= float(self.radius(theta)) - margin

    def contains_many(self, points, margin: float = 0.0) -> np.ndarray:
        """Vectorized containment test over an array of complex points."""
        off = np.asarray(points) - self.center
        return np.abs(off) <= self.radius(np.angle(off)) - margin

    def rotated(self, phi: float) -> "StarDomain":
        """Domain with radial function r(theta - phi): the shape rotated by phi."""
        cos_c, sin_c = [], []
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            c, s = math.cos(k * phi), math.sin(k * phi)
            cos_c.append(a * c - b * s)
            sin_c.append(a * s + b * c)
        return StarDomain(self.center, self.a0, tuple(cos_c), tuple(sin_c))


@dataclass(frozen=True, eq=False)
class AreaRule:
    """Quadrature for integrals against the area measure dA over a StarDomain."""

    nodes: np.ndarray  # complex positions
    weights: np.ndarray  # positive dA weights
    nr: int
    ntheta: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


@dataclass(frozen=True, eq=False)
class BoundaryRule:
    """Quadrature for contour integrals: sum(g(nodes) * tangents) ~ contour
    integral of g dz, counterclockwise."""

    nodes: np.ndarray
    tangents: np.ndarray  # complex dz weights
    ntheta: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.tangents.setflags(write=False)


def make_disk(center: complex, radius: float) -> StarDomain:
    """Disk of the given radius; the canonical factor domain."""
    if not (radius > 0.0) or not math.isfinite(radius):
        raise ValidationError(f"disk radius must be positive, got {radius}")
    return StarDomain(complex(center), float(radius))


def make_ellipse(center: complex, a: float, b: float) -> StarDomain:
    """Axis-aligned ellipse with semi-axes a (real direction) and b.

    The polar radius ab / sqrt(b^2 cos^2 + a^2 sin^2) is projected onto a
    truncated Fourier series; the truncation reproduces the exact radius to
    1e-10 in the sup norm.
    """
    if not (a > 0.0 and b > 0.0) or not (math.isfinite(a) and math.isfinite(b)):
        raise ValidationError(f"ellipse semi-axes must be positive, got a={a}, b={b}")
    n = 8192
    theta = np.linspace(0.0, TWO_PI, n, endpoint=False)
    exact = a * b / np.sqrt((b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2)
    spectrum = np.fft.rfft(exact) / n
    a0 = float(spectrum[0].real)
    cos_c = 2.0 * spectrum[1:].real
    keep = 0
    for k in range(len(cos_c), 0, -1):
        if abs(cos_c[k - 1]) > 1e-14:
            keep = k
            break
    dom = StarDomain(complex(center), a0, tuple(float(c) for c in cos_c[:keep]), (0.0,) * keep)
    err = float(np.max(np.abs(dom.radius(theta) - exact)))
    if err > 1e-10:
        raise ValidationError(f"ellipse Fourier truncation error {err:.2e} exceeds 1e-10")
    return dom


def area_rule(d: StarDomain, nr: int, ntheta: int) -> AreaRule:
    """Tensor rule on the polar parametrization zeta = c + rho*r(theta)*e^{i theta}.

    Weights carry the exact Jacobian rho*r(theta)^2, so the weight sum
    converges to the domain area (and is exact in rho for disks).
    """
    if nr < 2:
        raise ValidationError(f"nr must be >= 2, got {nr}")
    if ntheta < 4:
        raise ValidationError(f"ntheta must be >= 4, got {ntheta}")
    if d.r_min <= 0.0:
        raise ValidationError("degenerate domain: radial function not positive")
    rho, wr = _gauss_legendre_01(nr)
    theta = np.arange(ntheta) * (TWO_PI / ntheta)
    r = d.radius(theta)
    nodes = d.center + rho[:, None] * (r * np.exp(1j * theta))[None, :]
    weights = (wr * rho)[:, None] * (TWO_PI / ntheta) * (r**2)[None, :]
    return AreaRule(nodes.ravel(), weights.ravel(), nr, ntheta)


def boundary_rule(d: StarDomain, ntheta: int) -> BoundaryRule:
    """Trapezoid rule for counterclockwise contour integrals over the boundary."""
    if ntheta < 8:
        raise ValidationError(f"ntheta must be >= 8, got {ntheta}")
    theta = np.arange(ntheta) * (TWO_PI / ntheta)
    r = d.radius(theta)
    dr = d.radius_deriv(theta)
    phase = np.exp(1j * theta)
    nodes = d.center + r * phase
    tangents = (dr + 1j * r) * phase * (TWO_PI / ntheta)
    return BoundaryRule(nodes, tangents, ntheta)


def contains(d: StarDomain, z: complex, margin: float = 0.0) -> bool:
    """Module-level alias for StarDomain.contains."""
    return d.contains(z, margin)


def area_exact(d: StarDomain) -> float:
    """Closed-form area, half the angular integral of r(theta)^2."""
    return math.pi * (
        d.a0**2 + 0.5 * sum(a * a + b * b for a, b in zip(d.cos_coeffs, d.sin_coeffs))
    )
