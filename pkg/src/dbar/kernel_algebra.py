"""Algebraic layer for the product-domain kernels.

Provides the positive combination G of pairwise offset products, the exact
decomposition of an inverse product into pole terms, the product-Cauchy
kernels with one distinguished pole variable, their conjugate-derivative
closed forms, and the integer exponent systems used to certify integrability
of the kernel bounds.  Everything here is plain arithmetic: functions accept
scalars or broadcasting numpy arrays, and the exponent bookkeeping is done in
exact integers/fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NumericsError, ValidationError


def _validate_index_set(I, n=None) -> tuple[int, ...]:
    I = tuple(int(i) for i in I)
    if not I:
        raise ValidationError("index set must be non-empty")
    if any(i < 1 for i in I):
        raise ValidationError(f"indices must be >= 1, got {I}")
    if any(a >= b for a, b in zip(I, I[1:])):
        raise ValidationError(f"index set must be strictly increasing, got {I}")
    if n is not None and I[-1] > n:
        raise ValidationError(f"index {I[-1]} exceeds arity {n}")
    return I


def big_g(a):
    """sum_k prod_{l != k} |a_l|^2 over a non-empty list of complex entries.

    The empty product is 1, so a single entry gives G = 1.  Entries may be
    scalars or broadcasting arrays.
    """
    a = list(a)
    if not a:
        raise ValidationError("big_g needs at least one entry")
    sq = [np.abs(x) ** 2 for x in a]
    total = 0.0
    for k in range(len(a)):
        prod = 1.0
        for l, s in enumerate(sq):
            if l != k:
                prod = prod * s
        total = total + prod
    return total


def decompose_inverse_product(a) -> list[complex]:
    """Terms t_k with sum(t_k) = 1/(a_1 * ... * a_m) for non-zero entries.

    t_k = prod_{l != k} conj(a_l) / (a_k * G).
    """
    a = [complex(x) for x in a]
    if not a:
        raise ValidationError("decomposition needs at least one entry")
    if any(x == 0 for x in a):
        raise ValidationError("decomposition requires non-zero entries")
    G = big_g(a)
    terms = []
    for k in range(len(a)):
        num = 1 + 0j
        for l, x in enumerate(a):
            if l != k:
                num *= x.conjugate()
        terms.append(num / (a[k] * G))
    return terms


def kernel_g(zeta, z, k: int, I) -> complex:
    """Product-Cauchy kernel over the index set I with pole at position k.

    With offsets w_i = zeta_i - z_i for i in I, the value is
    prod_{l != k} conj(w_{i_l}) / (w_{i_k} * G), where G = big_g over the
    offsets.  For a singleton I this is 1/(w_{i_1}).
    """
    I = _validate_index_set(I)
    s = len(I)
    if not (1 <= k <= s):
        raise ValidationError(f"pole position k={k} outside 1..{s}")
    offs = [np.asarray(zeta[i - 1]) - np.asarray(z[i - 1]) for i in I]
    G = big_g(offs)
    num = 1.0
    for l in range(s):
        if l != k - 1:
            num = num * np.conjugate(offs[l])
    value = num / (offs[k - 1] * G)
    if not np.all(np.isfinite(value)):
        raise NumericsError("kernel evaluated at a singular configuration")
    return value


def kernel_g_derivative(zeta, z, k: int, I, J) -> complex:
    """Closed form for the |J|-fold conjugate derivative of kernel_g.

    J lists the differentiated indices (a subset of I without the pole index
    i_k).  The closed form assigns each variable a role: differentiated
    entries contribute |w|^(2(m-1)), untouched non-pole entries contribute
    conj(w)|w|^(2m), and the pole entry contributes conj(w)|w|^(2m-2), all
    over G^(m+1) and multiplied by m!.  The roles are symmetric under
    renaming, which extends the canonical-order formula to arbitrary J.
    """
    I = _validate_index_set(I)
    s = len(I)
    if not (1 <= k <= s):
        raise ValidationError(f"pole position k={k} outside 1..{s}")
    pole = I[k - 1]
    J = tuple(sorted(int(j) for j in J))
    if len(set(J)) != len(J) or any(j not in I for j in J) or pole in J:
        raise ValidationError(f"J={J} must be a subset of I={I} without the pole {pole}")
    m = len(J)
    if m == 0:
        return kernel_g(zeta, z, k, I)
    offs = {i: np.asarray(zeta[i - 1]) - np.asarray(z[i - 1]) for i in I}
    G = big_g(list(offs.values()))
    value = float(math.factorial(m)) / G ** (m + 1)
    for i in I:
        w = offs[i]
        if i == pole:
            value = value * np.conjugate(w) * np.abs(w) ** (2 * m - 2)
        elif i in J:
            value = value * np.abs(w) ** (2 * (m - 1))
        else:
            value = value * np.conjugate(w) * np.abs(w) ** (2 * m)
    if not np.all(np.isfinite(value)):
        raise NumericsError("kernel derivative evaluated at a singular configuration")
    return value


@dataclass(frozen=True)
class ExponentChoice:
    """Integer exponents (k, k_1..k_n) certifying integrability at order m.

    The constraints, checked exactly: parts sum to k; k_j(m+1) > k for
    j <= m; k_j > 0 for m < j < n; 2 k_n (m+1) > k.
    """

    n: int
    m: int
    k: int
    parts: tuple[int, ...]

    def __post_init__(self):
        if len(self.parts) != self.n:
            raise ValidationError("need one part per variable")
        if sum(self.parts) != self.k:
            raise ValidationError(f"parts {self.parts} do not sum to k={self.k}")
        for j, kj in enumerate(self.parts, start=1):
            if j <= self.m:
                if not kj * (self.m + 1) > self.k:
                    raise ValidationError(f"k_{j}={kj} fails k_j(m+1) > k")
            elif j <= self.n - 1:
                if not kj > 0:
                    raise ValidationError(f"k_{j}={kj} must be positive")
            else:
                if not 2 * kj * (self.m + 1) > self.k:
                    raise ValidationError(f"k_n={kj} fails 2 k_n (m+1) > k")


def exponent_choice(n: int, m: int) -> ExponentChoice:
    """The standard valid choice: k = 4(n-1)(m+1), k_j = 4(n-1)+1 for j <= m,
    k_j = 1 for m < j < n, and k_n the remainder (always 3(n-1))."""
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if not (0 <= m <= n - 1):
        raise ValidationError(f"m must lie in [0, {n - 1}], got {m}")
    k = 4 * (n - 1) * (m + 1)
    parts = [4 * (n - 1) + 1] * m + [1] * (n - 1 - m)
    parts.append(k - sum(parts))
    return ExponentChoice(n, m, k, tuple(parts))


def weighted_bound(b, parts, k: int):
    """Both sides of (sum b)^k >= prod b_j^{k_j} for non-negative b and
    non-negative integer parts summing to k."""
    b = [float(x) for x in b]
    parts = [int(p) for p in parts]
    if len(b) != len(parts):
        raise ValidationError("need one exponent per entry")
    if any(x < 0 for x in b) or any(p < 0 for p in parts):
        raise ValidationError("entries and exponents must be non-negative")
    if sum(parts) != k:
        raise ValidationError(f"parts sum to {sum(parts)}, expected k={k}")
    lhs = sum(b) ** k
    rhs = 1.0
    for x, p in zip(b, parts):
        rhs *= x**p
    return lhs, rhs


def hm_exponents(choice: ExponentChoice) -> list[Fraction]:
    """Net offset exponents appearing in the denominator of the H_m bound,
    canonical ordering (variables 1..m solid, m+1..n-1 boundary, n solid)."""
    n, m, k = choice.n, choice.m, choice.k
    out = []
    for j, kj in enumerate(choice.parts, start=1):
        base = Fraction(2 * (m + 1) * (k - kj), k)
        if j <= m:
            out.append(base - 2 * (m - 1))
        elif j <= n - 1:
            out.append(base - (2 * m + 1))
        else:
            out.append(base - (2 * m - 2) - 1)
    return out


def hm_bound(zeta, z, m: int, choice: ExponentChoice) -> float:
    """Value of H_m in the canonical ordering; |kernel derivative| <= m! H_m.

    The numerator repeats the moduli of the derivative closed form; the
    denominator replaces G^(m+1) with the product bound induced by the
    exponent choice.
    """
    n = choice.n
    if choice.m != m:
        raise ValidationError(f"choice was built for m={choice.m}, got m={m}")
    rho = [abs(complex(zeta[i]) - complex(z[i])) for i in range(n)]
    if min(rho) == 0.0:
        raise NumericsError("H_m evaluated at a singular configuration")
    num = 1.0
    for j in range(1, n + 1):
        r = rho[j - 1]
        if j <= m:
            num *= r ** (2 * (m - 1))
        elif j <= n - 1:
            num *= r ** (2 * m + 1)
        else:
            num *= r ** (2 * m - 1)
    den = 1.0
    for j, kj in enumerate(choice.parts, start=1):
        den *= rho[j - 1] ** (2 * (m + 1) * (choice.k - kj) / choice.k)
    return num / den
