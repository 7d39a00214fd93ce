"""q-expansion modular-form core and group machinery.

Level-1 series (E2, E4, E6, Delta, j) are computed with exact rational
coefficients and cached; evaluation converts to the requested floating
precision on demand.  Congruence subgroups enter only through element
enumeration and membership predicates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, List, Sequence, Tuple, Union

import mpmath as mp
import sympy
from mpmath import mpc, mpf

__all__ = [
    "IntMatrix2",
    "CongruenceGroup",
    "SL2Z",
    "QSeries",
    "UnsupportedWeight",
    "TailTooLarge",
    "DegenerateAction",
    "eisenstein",
    "delta_and_j",
    "eval_qseries",
    "reduce_to_fundamental_domain",
    "enumerate_bottom_rows",
    "canonical_bottom_rows",
    "automorphy",
    "hyperbolic_distance",
    "ensure_upper",
]


class UnsupportedWeight(Exception):
    pass


class TailTooLarge(Exception):
    """Truncation tail estimate exceeds the requested tolerance."""


class DegenerateAction(Exception):
    pass


# ---------------------------------------------------------------------------
# 2x2 integer matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntMatrix2:
    a: int
    b: int
    c: int
    d: int

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "IntMatrix2") -> "IntMatrix2":
        return IntMatrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __neg__(self) -> "IntMatrix2":
        return IntMatrix2(-self.a, -self.b, -self.c, -self.d)

    def inv(self) -> "IntMatrix2":
        det = self.det
        if det not in (1, -1):
            raise ValueError("integral inverse requires det = +-1")
        return IntMatrix2(det * self.d, -det * self.b, -det * self.c, det * self.a)

    def act(self, z):
        """Moebius action (az+b)/(cz+d)."""
        den = self.c * z + self.d
        if den == 0:
            raise DegenerateAction(f"cz + d = 0 at z = {z}")
        return (self.a * z + self.b) / den

    def j(self, z):
        """Automorphy factor cz + d."""
        return self.c * z + self.d

    def entries(self) -> Tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @staticmethod
    def identity() -> "IntMatrix2":
        return IntMatrix2(1, 0, 0, 1)

    @staticmethod
    def T(n: int = 1) -> "IntMatrix2":
        return IntMatrix2(1, n, 0, 1)

    @staticmethod
    def S() -> "IntMatrix2":
        return IntMatrix2(0, -1, 1, 0)


def automorphy(gamma: IntMatrix2, z):
    """The weight cocycle j_gamma(z) = cz + d (and gamma z on request)."""
    return gamma.j(z)


# ---------------------------------------------------------------------------
# Congruence groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CongruenceGroup:
    """SL2(Z), Gamma0(N) or Gamma1(N), given by kind and level."""

    kind: str  # 'sl2z' | 'gamma0' | 'gamma1'
    level: int = 1

    def __post_init__(self):
        if self.kind not in ("sl2z", "gamma0", "gamma1"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.level < 1:
            raise ValueError("level must be positive")

    def contains(self, m: IntMatrix2) -> bool:
        if m.det != 1:
            return False
        if self.kind == "sl2z":
            return True
        if m.c % self.level != 0:
            return False
        if self.kind == "gamma0":
            return True
        return (m.a - 1) % self.level == 0 and (m.d - 1) % self.level == 0

    def row_allowed(self, c: int, d: int) -> bool:
        if self.kind == "sl2z":
            return True
        if c % self.level != 0:
            return False
        if self.kind == "gamma0":
            return True
        return (d - 1) % self.level == 0

    @property
    def contains_minus_identity(self) -> bool:
        if self.kind in ("sl2z", "gamma0"):
            return True
        return self.level <= 2

    def __str__(self):
        if self.kind == "sl2z":
            return "SL2(Z)"
        name = "Gamma0" if self.kind == "gamma0" else "Gamma1"
        return f"{name}({self.level})"


SL2Z = CongruenceGroup("sl2z", 1)


def group_from_name(name: str) -> CongruenceGroup:
    name = name.strip().lower()
    if name in ("sl2z", "sl2(z)", "sl2"):
        return SL2Z
    for prefix, kind in (("gamma0(", "gamma0"), ("gamma1(", "gamma1")):
        if name.startswith(prefix) and name.endswith(")"):
            return CongruenceGroup(kind, int(name[len(prefix):-1]))
    raise ValueError(f"cannot parse group name {name!r}")


# ---------------------------------------------------------------------------
# q-series
# ---------------------------------------------------------------------------

Coeff = Union[Fraction, int, complex, mpc, mpf]


@dataclass
class QSeries:
    """Truncated q-expansion ``sum_{n} c_n q^{n/width}``.

    ``coefficients[i]`` is the coefficient of ``q**(leading_exponent+i)``;
    exponents below ``truncation_order`` (exclusive) are represented.
    Arithmetic tracks the minimum valid truncation order of the operands.
    """

    leading_exponent: int
    coefficients: List[Coeff]
    truncation_order: int
    cusp_width: int = 1

    def __post_init__(self):
        expected = self.truncation_order - self.leading_exponent
        if len(self.coefficients) != expected:
            raise ValueError(
                f"coefficient list length {len(self.coefficients)} != "
                f"truncation_order - leading_exponent = {expected}"
            )

    # -- queries ------------------------------------------------------

    def coeff(self, n: int):
        if n < self.leading_exponent:
            return 0
        if n >= self.truncation_order:
            raise IndexError(f"exponent {n} beyond truncation order {self.truncation_order}")
        return self.coefficients[n - self.leading_exponent]

    def trim(self) -> "QSeries":
        """Drop leading zero coefficients."""
        coeffs = list(self.coefficients)
        lead = self.leading_exponent
        while coeffs and coeffs[0] == 0:
            coeffs.pop(0)
            lead += 1
        if not coeffs:
            return QSeries(self.truncation_order, [], self.truncation_order, self.cusp_width)
        return QSeries(lead, coeffs, self.truncation_order, self.cusp_width)

    def truncate(self, order: int) -> "QSeries":
        if order >= self.truncation_order:
            return self
        return QSeries(
            self.leading_exponent,
            self.coefficients[: order - self.leading_exponent],
            order,
            self.cusp_width,
        )

    # -- ring operations ------------------------------------------------

    def _binop(self, other: "QSeries", sign: int) -> "QSeries":
        if self.cusp_width != other.cusp_width:
            raise ValueError("width mismatch")
        order = min(self.truncation_order, other.truncation_order)
        lead = min(self.leading_exponent, other.leading_exponent)
        coeffs = []
        for n in range(lead, order):
            x = self.coeff(n) if n < self.truncation_order else 0
            y = other.coeff(n) if n < other.truncation_order else 0
            coeffs.append(x + sign * y)
        return QSeries(lead, coeffs, order, self.cusp_width)

    def __add__(self, other):
        return self._binop(other, +1)

    def __sub__(self, other):
        return self._binop(other, -1)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            if self.cusp_width != other.cusp_width:
                raise ValueError("width mismatch")
            lead = self.leading_exponent + other.leading_exponent
            # order bound: a factor known mod q^{N} limits the product likewise
            order = min(
                self.truncation_order + other.leading_exponent,
                other.truncation_order + self.leading_exponent,
            )
            n_out = order - lead
            out = [0] * n_out
            for i, x in enumerate(self.coefficients):
                if x == 0:
                    continue
                jmax = min(len(other.coefficients), n_out - i)
                for j in range(jmax):
                    y = other.coefficients[j]
                    if y != 0:
                        out[i + j] += x * y
            return QSeries(lead, out, order, self.cusp_width)
        return QSeries(
            self.leading_exponent,
            [c * other for c in self.coefficients],
            self.truncation_order,
            self.cusp_width,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QSeries":
        s = self.trim()
        if not s.coefficients or s.coefficients[0] == 0:
            raise ZeroDivisionError("cannot invert a series with zero leading coefficient")
        n = len(s.coefficients)
        lead_inv = -s.leading_exponent
        a0 = s.coefficients[0]
        out = [0] * n
        out[0] = Fraction(1, a0) if isinstance(a0, int) else 1 / a0
        for k in range(1, n):
            acc = 0
            for i in range(1, k + 1):
                if i < n and s.coefficients[i] != 0:
                    acc += s.coefficients[i] * out[k - i]
            out[k] = -acc * out[0]
        return QSeries(lead_inv, out, lead_inv + n, self.cusp_width)

    def power(self, e: int) -> "QSeries":
        if e < 0:
            return self.inverse().power(-e)
        if e == 0:
            n = len(self.coefficients)
            return QSeries(0, [Fraction(1)] + [Fraction(0)] * (n - 1), n, self.cusp_width)
        result = self
        for _ in range(e - 1):
            result = result * self
        return result

    def q_derivative(self) -> "QSeries":
        """q d/dq; multiply by 2*pi*i/width for the z-derivative."""
        return QSeries(
            self.leading_exponent,
            [n * c for n, c in zip(range(self.leading_exponent, self.truncation_order),
                                   self.coefficients)],
            self.truncation_order,
            self.cusp_width,
        )

    # -- conversion and evaluation ---------------------------------------

    def map_coefficients(self, fn) -> "QSeries":
        return QSeries(self.leading_exponent, [fn(c) for c in self.coefficients],
                       self.truncation_order, self.cusp_width)

    def as_mpc(self) -> "QSeries":
        def conv(c):
            if isinstance(c, Fraction):
                return mpf(c.numerator) / c.denominator
            if isinstance(c, int):
                return mpf(c)
            return mpc(c)
        return self.map_coefficients(conv)

    def as_complex(self) -> "QSeries":
        return self.map_coefficients(complex)

    def evaluate(self, z, tolerance=None):
        """Value at z through q = exp(2 pi i z / width), plus a tail estimate.

        The tail is estimated geometrically from the observed coefficient
        growth near the truncation order; ``TailTooLarge`` is raised when a
        tolerance is given and the estimate exceeds it.
        """
        use_mp = isinstance(z, (mpc, mpf)) or any(
            isinstance(c, (mpc, mpf)) for c in self.coefficients[:1]
        )
        if use_mp:
            q = mp.e ** (2j * mp.pi * mpc(z) / self.cusp_width)
        else:
            import cmath
            q = cmath.exp(2j * cmath.pi * complex(z) / self.cusp_width)
        absq = abs(q)
        if absq >= 1:
            raise ValueError("evaluation requires Im z > 0 (|q| < 1)")
        # Horner in q from the top
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * q + c
        acc = acc * q ** self.leading_exponent
        tail = self._tail_estimate(absq)
        if tolerance is not None and tail > tolerance:
            raise TailTooLarge(f"tail estimate {tail} exceeds tolerance {tolerance}")
        return acc, tail

    def _tail_estimate(self, absq: float):
        if not self.coefficients:
            return 0.0
        n_last = self.truncation_order - 1
        window = self.coefficients[-8:]
        mags = [abs(complex(c)) if not isinstance(c, (Fraction, int)) else abs(float(c))
                for c in window]
        m = max(mags) if mags else 0.0
        # coefficient growth ratio, capped to keep the geometric bound valid
        ratio = 1.0
        for x, y in zip(mags, mags[1:]):
            if x > 0 and y > 0:
                ratio = max(ratio, (y / x))
        r = float(absq) * min(ratio, 1 / (2 * float(absq)))
        if r >= 1:
            return float("inf")
        return m * float(absq) ** (n_last + 1) * ratio / (1 - r)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        def enc(c):
            if isinstance(c, Fraction):
                return f"{c.numerator}/{c.denominator}"
            if isinstance(c, int):
                return str(c)
            cc = mpc(c)
            return [mp.nstr(cc.real, 30), mp.nstr(cc.imag, 30)]
        return json.dumps(
            {
                "leading_exponent": self.leading_exponent,
                "width": self.cusp_width,
                "coefficients": [enc(c) for c in self.coefficients],
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "QSeries":
        data = json.loads(text)
        coeffs = []
        for c in data["coefficients"]:
            if isinstance(c, str):
                coeffs.append(Fraction(c))
            else:
                coeffs.append(mpc(mpf(c[0]), mpf(c[1])))
        lead = data["leading_exponent"]
        return QSeries(lead, coeffs, lead + len(coeffs), data["width"])


# ---------------------------------------------------------------------------
# Level-1 series with exact rational coefficients
# ---------------------------------------------------------------------------

_series_cache: dict = {}

MAX_EXACT_ORDER = 1024


def _divisor_power_sum(n: int, e: int) -> int:
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d ** e
            if d != n // d:
                total += (n // d) ** e
        d += 1
    return total


def eisenstein(k: int, order: int) -> QSeries:
    """Normalized Eisenstein series E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n."""
    if k < 2 or k % 2 != 0:
        raise UnsupportedWeight(f"Eisenstein weight must be even and >= 2, got {k}")
    if order < 1:
        raise ValueError("order must be >= 1")
    key = ("E", k)
    cached = _series_cache.get(key)
    if cached is None or cached.truncation_order < order:
        n_ord = max(order, 64)
        bk = Fraction(sympy.bernoulli(k))
        factor = Fraction(-2 * k) / bk
        coeffs = [Fraction(1)] + [factor * _divisor_power_sum(n, k - 1) for n in range(1, n_ord)]
        cached = QSeries(0, coeffs, n_ord)
        _series_cache[key] = cached
    return cached.truncate(order)


def delta_and_j(order: int) -> Tuple[QSeries, QSeries]:
    """The cusp form Delta = (E4^3 - E6^2)/1728 and j = E4^3/Delta."""
    if order < 1:
        raise ValueError("order must be >= 1")
    key = ("DJ",)
    cached = _series_cache.get(key)
    if cached is None or cached[0].truncation_order < order:
        n_ord = max(order + 1, 64)
        e4 = eisenstein(4, n_ord)
        e6 = eisenstein(6, n_ord)
        e4c = e4 * e4 * e4
        e6sq = e6 * e6
        delta = (e4c - e6sq) * Fraction(1, 1728)
        jj = e4c * delta.trim().inverse()
        _series_cache[key] = (delta, jj)
        cached = _series_cache[key]
    delta, jj = cached
    return delta.truncate(order), jj.truncate(order)


def eval_qseries(f: QSeries, z, tolerance=None):
    """Evaluate a q-series at a point of the upper half-plane."""
    if _imag(z) <= 0:
        raise ValueError("Im z must be positive")
    return f.evaluate(z, tolerance)


def _imag(z):
    if isinstance(z, (mpc, mpf)):
        return mpc(z).imag
    return complex(z).imag


def ensure_upper(z, name: str = "z"):
    if _imag(z) <= 0:
        raise ValueError(f"{name} must lie in the upper half-plane")
    return z


# ---------------------------------------------------------------------------
# Fundamental domain and enumeration
# ---------------------------------------------------------------------------

def reduce_to_fundamental_domain(z, max_iter: int = 10_000):
    """Return (gamma, z0) with z0 = gamma z, |Re z0| <= 1/2 and |z0| >= 1."""
    ensure_upper(z)
    gamma = IntMatrix2.identity()
    cur = z
    for _ in range(max_iter):
        x = _real(cur)
        n = int(_floor(x + 0.5))
        if n != 0:
            cur = cur - n
            gamma = IntMatrix2.T(-n) @ gamma
        if abs(cur) < 1 - 1e-15:
            cur = -1 / cur
            gamma = IntMatrix2.S() @ gamma
        else:
            return gamma, cur
    raise RuntimeError("fundamental-domain reduction did not terminate")


def _real(z):
    if isinstance(z, (mpc, mpf)):
        return mpc(z).real
    return complex(z).real


def _floor(x):
    if isinstance(x, mpf):
        return mp.floor(x)
    import math
    return math.floor(x)


def hyperbolic_distance(z, w) -> float:
    """Hyperbolic distance on the upper half-plane."""
    z = complex(z)
    w = complex(w)
    t = 1 + abs(z - w) ** 2 / (2 * z.imag * w.imag)
    import math
    return math.acosh(t)


def _egcd(a: int, b: int) -> Tuple[int, int, int]:
    """(g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_x, x = x, old_x - qq * x
        old_y, y = y, old_y - qq * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def _row_representative(c: int, d: int) -> IntMatrix2:
    if c == 0:
        # (d, 0; 0, d) with d = +-1
        return IntMatrix2(d, 0, 0, d) if d in (1, -1) else _raise_noncoprime(c, d)
    g, x, y = _egcd(d, c)
    if g != 1:
        _raise_noncoprime(c, d)
    # x*d + y*c = 1  ->  a = x, b = -y gives a*d - b*c = 1
    return IntMatrix2(x, -y, c, d)


def _raise_noncoprime(c, d):
    raise ValueError(f"bottom row ({c}, {d}) is not coprime")


def enumerate_bottom_rows(group: CongruenceGroup, bound: int):
    """All coprime bottom rows (c, d), max(|c|,|d|) <= bound, allowed by the group.

    Each row is returned once together with one representative group
    element carrying it.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    out = []
    for c in range(-bound, bound + 1):
        for d in range(-bound, bound + 1):
            if gcd(abs(c), abs(d)) != 1:
                continue
            if not group.row_allowed(c, d):
                continue
            rep = _row_representative(c, d)
            assert group.contains(rep), (c, d)
            out.append(((c, d), rep))
    return out


def canonical_bottom_rows(group: CongruenceGroup, bound: int):
    """One bottom row per {+-} pair, shell-major then lexicographic order.

    Used by the lattice sums: for groups containing -I the summand of the
    omitted sign is accounted for by doubling (even weight) or exact
    cancellation (odd weight).
    """
    rows = []
    for shell in range(1, bound + 1):
        shell_rows = []
        for c in range(0, shell + 1):
            for d in range(-shell, shell + 1):
                if max(c, abs(d)) != shell:
                    continue
                if c == 0 and d != 1:
                    continue
                if c == 0 and shell != 1:
                    continue
                if gcd(c, abs(d)) != 1:
                    continue
                if not group.row_allowed(c, d):
                    continue
                shell_rows.append((c, d))
        shell_rows.sort()
        rows.extend(shell_rows)
    return [(cd, _row_representative(*cd)) for cd in rows]
