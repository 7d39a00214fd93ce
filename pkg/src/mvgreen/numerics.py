"""Precision model, numerical differentiation, contour quadrature, and
integer-relation detection.

Two precision tiers are used throughout the package: hardware doubles for
the identity-verification suites (lattice sums, fixture comparisons), and
software floats via mpmath for everything feeding algebraic-number
recognition, where 40+ correct digits are required.  :class:`BigComplex`
is the tracked-precision carrier used at API boundaries; internal hot
loops work on raw ``complex`` / ``mpmath.mpc`` values under an explicit
context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import gcd
from typing import Callable, Optional, Sequence

import mpmath as mp
from mpmath import mpf, mpc

__all__ = [
    "BigComplex",
    "MinPolyCandidate",
    "StencilSingular",
    "SampleFailure",
    "PrecisionTooLow",
    "wirtinger_derivs",
    "contour_residue",
    "find_min_poly",
    "working_dps",
]


class StencilSingular(Exception):
    """A finite-difference stencil point could not be evaluated."""


class SampleFailure(Exception):
    """A contour sample point could not be evaluated."""


class PrecisionTooLow(Exception):
    """Not enough digits for the requested recognition problem."""


def working_dps(digits: int):
    """Context manager setting the mpmath working precision in digits."""
    return mp.workdps(digits)


# ---------------------------------------------------------------------------
# Tracked-precision complex numbers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BigComplex:
    """A complex number carrying its own binary working precision.

    Arithmetic runs at the minimum of the operand precisions; each basic
    operation (add/mul/div/log/exp/sqrt) is correct to relative
    ``2**(4 - precision_bits)``, which the test suite checks against
    higher-precision recomputation.
    """

    re: mpf
    im: mpf
    precision_bits: int

    @staticmethod
    def make(value, precision_bits: int = 200) -> "BigComplex":
        with mp.workprec(precision_bits):
            z = mpc(value)
            return BigComplex(z.real, z.imag, precision_bits)

    def to_mpc(self) -> mpc:
        return mpc(self.re, self.im)

    def conjugate(self) -> "BigComplex":
        return BigComplex(self.re, -self.im, self.precision_bits)

    def _binary(self, other, op) -> "BigComplex":
        if not isinstance(other, BigComplex):
            other = BigComplex.make(other, self.precision_bits)
        prec = min(self.precision_bits, other.precision_bits)
        with mp.workprec(prec):
            z = op(self.to_mpc(), other.to_mpc())
            z = mpc(z)
            return BigComplex(z.real, z.imag, prec)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return BigComplex(-self.re, -self.im, self.precision_bits)

    def _unary(self, fn) -> "BigComplex":
        with mp.workprec(self.precision_bits):
            z = mpc(fn(self.to_mpc()))
            return BigComplex(z.real, z.imag, self.precision_bits)

    def exp(self):
        return self._unary(mp.exp)

    def log(self):
        return self._unary(mp.log)

    def sqrt(self):
        return self._unary(mp.sqrt)

    def abs(self) -> mpf:
        with mp.workprec(self.precision_bits):
            return abs(self.to_mpc())

    def __complex__(self):
        return complex(float(self.re), float(self.im))


# ---------------------------------------------------------------------------
# Wirtinger derivatives by central differences
# ---------------------------------------------------------------------------

def wirtinger_derivs(
    f: Callable,
    z,
    h: float = 1e-4,
    richardson: bool = True,
):
    """First Wirtinger derivatives ``(df/dz, df/dzbar)`` at ``z``.

    Central differences on the 4-point stencil ``z +/- h, z +/- ih`` give
    ``d/dz = (f_x - i f_y)/2`` and ``d/dzbar = (f_x + i f_y)/2`` with
    truncation error O(h^2); one level of Richardson extrapolation
    (enabled by default) improves this to O(h^4).  The caller must keep
    the stencil away from singular loci.
    """

    def _pair(step):
        try:
            fx = (f(z + step) - f(z - step)) / (2 * step)
            fy = (f(z + 1j * step) - f(z - 1j * step)) / (2 * step)
        except (ZeroDivisionError, ValueError, FloatingPointError, OverflowError) as exc:
            raise StencilSingular(f"stencil evaluation failed near {z}: {exc}") from exc
        dz = (fx - 1j * fy) / 2
        dzb = (fx + 1j * fy) / 2
        return dz, dzb

    if not h > 0:
        raise ValueError("step size must be positive")
    d1 = _pair(h)
    if not richardson:
        return d1
    d2 = _pair(h / 2)
    return (
        (4 * d2[0] - d1[0]) / 3,
        (4 * d2[1] - d1[1]) / 3,
    )


# ---------------------------------------------------------------------------
# Contour residues
# ---------------------------------------------------------------------------

def contour_residue(f: Callable, center, radius: float, n_samples: int = 256):
    """``(1/2 pi i) \\oint f dz`` on the circle of the given radius.

    Trapezoid rule on the circle; exact up to roundoff for Laurent
    polynomials of degree below ``n_samples/2``, and exponentially
    accurate for functions meromorphic near the circle.
    """
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    use_mp = isinstance(center, (mpc, mpf)) or isinstance(radius, (mpc, mpf))
    if use_mp:
        two_pi_i = 2j * mp.pi
        total = mpc(0)
        for j in range(n_samples):
            zeta = radius * mp.exp(two_pi_i * j / n_samples)
            try:
                total += f(center + zeta) * zeta
            except (ZeroDivisionError, ValueError, OverflowError) as exc:
                raise SampleFailure(f"boundary evaluation failed at sample {j}") from exc
        return total / n_samples
    total = 0j
    for j in range(n_samples):
        zeta = radius * complex(math.cos(2 * math.pi * j / n_samples),
                                math.sin(2 * math.pi * j / n_samples))
        try:
            total += f(center + zeta) * zeta
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise SampleFailure(f"boundary evaluation failed at sample {j}") from exc
    return total / n_samples


# ---------------------------------------------------------------------------
# Integer-relation detection (LLL / algdep)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinPolyCandidate:
    """An integer polynomial nearly vanishing at the input value.

    ``coefficients`` are highest degree first, coprime as a tuple with
    positive leading coefficient.  ``residual`` is ``|P(alpha)|`` at full
    working precision.
    """

    coefficients: tuple
    residual: mpf
    input_precision_digits: int

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def height(self) -> int:
        return max(abs(int(c)) for c in self.coefficients)

    def __call__(self, x):
        acc = 0
        for c in self.coefficients:
            acc = acc * x + int(c)
        return acc

    def roots(self, dps: int = 50):
        with mp.workdps(dps):
            return mp.polyroots([mpf(int(c)) for c in self.coefficients], maxsteps=200)


def _lll_reduce(rows: list) -> list:
    from sympy import ZZ
    from sympy.polys.matrices import DomainMatrix

    dm = DomainMatrix([[ZZ(int(x)) for x in row] for row in rows],
                      (len(rows), len(rows[0])), ZZ)
    red = dm.lll(delta=0.99)
    return [[int(x) for x in row] for row in red.to_Matrix().tolist()]


def _normalize_coeffs(coeffs: Sequence[int]) -> Optional[tuple]:
    cs = list(coeffs)
    while cs and cs[0] == 0:
        cs.pop(0)
    if not cs:
        return None
    g = 0
    for c in cs:
        g = gcd(g, abs(c))
    cs = [c // g for c in cs]
    if cs[0] < 0:
        cs = [-c for c in cs]
    return tuple(cs)


def _algdep_candidates(alpha: mpc, max_degree: int, scale_digits: int):
    """Integer coefficient vectors from LLL on the standard algdep lattice."""
    scale = 10 ** scale_digits
    powers = [mpc(1)]
    for _ in range(max_degree):
        powers.append(powers[-1] * alpha)
    rows = []
    for i, p in enumerate(powers):
        row = [0] * (max_degree + 1)
        row[i] = 1
        row.append(int(mp.nint(p.real * scale)))
        row.append(int(mp.nint(p.imag * scale)))
        rows.append(row)
    out = []
    for row in _lll_reduce(rows):
        # ascending-degree coefficients live in the first max_degree+1 slots
        coeffs = _normalize_coeffs(list(reversed(row[: max_degree + 1])))
        if coeffs is not None and len(coeffs) >= 2:
            out.append(coeffs)
    return out


def find_min_poly(
    alpha,
    max_degree: int,
    working_digits: int,
    guard_digits_per_degree: int = 10,
    residual_exponent: float = 0.5,
    height_exponent: float = 1 / 3,
) -> Optional[MinPolyCandidate]:
    """Recognize ``alpha`` as an algebraic number of bounded degree.

    LLL is run on the algdep lattice built from the powers 1, alpha, ...,
    alpha^max_degree at scale ``10**working_digits``.  A candidate is
    accepted only if all of the following hold, which together reject the
    spurious relations LLL produces for generic inputs:

    - residual ``|P(alpha)| <= 10**(-working_digits * residual_exponent)``
    - coefficient height ``<= 10**(working_digits * height_exponent)``
    - the same normalized coefficient vector reappears when the lattice
      scale is reduced to three quarters of the working digits.

    Returns the surviving candidate of smallest (residual, height), or
    ``None`` when nothing survives.
    """
    if working_digits < guard_digits_per_degree * max_degree:
        raise PrecisionTooLow(
            f"{working_digits} digits < {guard_digits_per_degree}*{max_degree}; "
            "raise working_digits or lower max_degree"
        )
    with mp.workdps(working_digits + 20):
        a = mpc(alpha) if not isinstance(alpha, BigComplex) else alpha.to_mpc()
        full = _algdep_candidates(a, max_degree, working_digits)
        confirm = set(_algdep_candidates(a, max_degree, max(10, (3 * working_digits) // 4)))
        res_bound = mpf(10) ** (-working_digits * residual_exponent)
        height_bound = 10 ** (working_digits * height_exponent)
        best = None
        for coeffs in full:
            if coeffs not in confirm:
                continue
            height = max(abs(c) for c in coeffs)
            if height > height_bound:
                continue
            val = mpc(0)
            for c in coeffs:
                val = val * a + c
            residual = abs(val)
            if residual > res_bound:
                continue
            key = (residual, height, len(coeffs))
            if best is None or key < best[0]:
                best = (key, coeffs, residual)
        if best is None:
            return None
        _, coeffs, residual = best
        return MinPolyCandidate(coeffs, residual, working_digits)
