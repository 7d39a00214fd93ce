"""Legendre functions of the second kind at integer index, exactly.

Q_m(t) = A_m(t) * L0(t) + B_m(t) with L0(t) = (1/2) log((t+1)/(t-1)) and
A_m, B_m rational polynomials, built from the three-term recurrence

    (m+1) Q_{m+1}(t) - (2m+1) t Q_m(t) + m Q_{m-1}(t) = 0

starting at Q_0 = L0 and Q_1 = t*L0 - 1.  The closed form makes the
differential identities exact polynomial statements; the upward
recurrence is numerically unstable in floating point, which is why the
coefficients are kept rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import mpmath as mp
import numpy as np
import sympy as sp
from mpmath import mpf

__all__ = [
    "LegendreQ",
    "DomainError",
    "legendre_q",
    "eval_q",
    "eval_q_array",
    "ode_residual",
    "high_derivative_residual",
    "reflection_parity_ok",
    "q_tail_constant",
]

_t = sp.Symbol("t")


class DomainError(Exception):
    pass


@dataclass(frozen=True)
class LegendreQ:
    """Q_m in the exact form A(t) * L0(t) + B(t)."""

    m: int
    A: sp.Expr
    B: sp.Expr

    def as_pair(self) -> Tuple[sp.Expr, sp.Expr]:
        return self.A, self.B

    def a_coeffs(self) -> list:
        return [Fraction(str(c)) for c in sp.Poly(self.A, _t).all_coeffs()]

    def b_coeffs(self) -> list:
        return [Fraction(str(c)) for c in sp.Poly(self.B, _t).all_coeffs()]


@lru_cache(maxsize=None)
def legendre_q(m: int) -> LegendreQ:
    if m < 0:
        raise ValueError("index must be nonnegative")
    if m == 0:
        return LegendreQ(0, sp.Integer(1), sp.Integer(0))
    if m == 1:
        return LegendreQ(1, _t, sp.Integer(-1))
    prev2 = legendre_q(m - 2)
    prev1 = legendre_q(m - 1)
    n = m - 1
    A = sp.expand((sp.Integer(2 * n + 1) * _t * prev1.A - n * prev2.A) / (n + 1))
    B = sp.expand((sp.Integer(2 * n + 1) * _t * prev1.B - n * prev2.B) / (n + 1))
    return LegendreQ(m, A, B)


def _log_term(t):
    return mp.log((t + 1) / (t - 1)) / 2


def eval_q(m: int, t, dps: int = None):
    """Q_m(t) for t > 1 from the exact closed form."""
    ctx = mp.workdps(dps) if dps else _null_ctx()
    with ctx:
        tv = mpf(t) if not isinstance(t, (mpf, mp.mpc)) else t
        if not tv > 1:
            raise DomainError(f"eval_q requires t > 1, got {t}")
        q = legendre_q(m)
        a = _horner(q.a_coeffs(), tv)
        b = _horner(q.b_coeffs(), tv)
        return a * _log_term(tv) + b


def _horner(coeffs, x):
    acc = mpf(0) if isinstance(x, (mpf, mp.mpc)) else 0.0
    for c in coeffs:
        acc = acc * x + mpf(c.numerator) / c.denominator if isinstance(x, (mpf, mp.mpc)) \
            else acc * x + float(c)
    return acc


def _null_ctx():
    from contextlib import nullcontext
    return nullcontext()


@lru_cache(maxsize=None)
def _float_coeffs(m: int):
    q = legendre_q(m)
    return (np.array([float(c) for c in q.a_coeffs()]),
            np.array([float(c) for c in q.b_coeffs()]))


@lru_cache(maxsize=None)
def _asymptotic_coeffs(m: int, n_terms: int = 40):
    """Q_m(t) = sum_j c_j t^{-(m+1+2j)}: hypergeometric tail coefficients."""
    import math
    a = m / 2 + 1.0
    b = m / 2 + 0.5
    c = m + 1.5
    r = math.sqrt(math.pi) * math.factorial(m) / (math.gamma(m + 1.5) * 2 ** (m + 1))
    out = [r]
    for j in range(n_terms - 1):
        r *= (a + j) * (b + j) / ((c + j) * (j + 1))
        out.append(r)
    return np.array(out)


_T_SWITCH = 4.0


def eval_q_array(m: int, t: np.ndarray) -> np.ndarray:
    """Vectorized double-precision Q_m on arrays with entries > 1.

    The A*L0 + B closed form cancels catastrophically for large t (both
    halves grow like t^m while Q_m ~ t^{-m-1}), so arguments above
    ``_T_SWITCH`` use the descending hypergeometric expansion instead.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 1):
        raise DomainError("eval_q_array requires t > 1 elementwise")
    out = np.empty_like(t)
    near = t < _T_SWITCH
    if near.any():
        a, b = _float_coeffs(m)
        tn = t[near]
        out[near] = np.polyval(a, tn) * 0.5 * np.log((tn + 1) / (tn - 1)) + np.polyval(b, tn)
    far = ~near
    if far.any():
        tf = t[far]
        x = 1.0 / (tf * tf)
        coeffs = _asymptotic_coeffs(m)
        acc = np.zeros_like(tf)
        for cj in coeffs[::-1]:
            acc = acc * x + cj
        out[far] = acc * tf ** (-(m + 1))
    return out


# ---------------------------------------------------------------------------
# Exact identities
# ---------------------------------------------------------------------------

def _derivative_pair(A: sp.Expr, B: sp.Expr) -> Tuple[sp.Expr, sp.Expr]:
    # d/dt [A*L0 + B] = A'*L0 + (B' + A/(1-t^2)),   since L0' = 1/(1-t^2)
    return sp.diff(A, _t), sp.cancel(sp.diff(B, _t) + A / (1 - _t ** 2))


def ode_residual(m: int) -> Tuple[sp.Expr, sp.Expr]:
    """(1-t^2) Q'' - 2t Q' + m(m+1) Q as an exact (A, B) pair.

    Both components are identically zero rational functions.
    """
    q = legendre_q(m)
    A0, B0 = q.A, q.B
    A1, B1 = _derivative_pair(A0, B0)
    A2, B2 = _derivative_pair(A1, B1)
    lam = m * (m + 1)
    RA = sp.cancel((1 - _t ** 2) * A2 - 2 * _t * A1 + lam * A0)
    RB = sp.cancel((1 - _t ** 2) * B2 - 2 * _t * B1 + lam * B0)
    return RA, RB


def high_derivative_residual(m: int) -> Tuple[sp.Expr, sp.Expr]:
    """d^{m+1} Q_m / dt^{m+1} - 2^m m! / (1-t^2)^{m+1}, exactly."""
    q = legendre_q(m)
    A, B = q.A, q.B
    for _ in range(m + 1):
        A, B = _derivative_pair(A, B)
    target = sp.Integer(2 ** m) * sp.factorial(m) / (1 - _t ** 2) ** (m + 1)
    return sp.cancel(A), sp.cancel(B - target)


def reflection_parity_ok(m: int) -> bool:
    """Q_m(t) = (-1)^{m+1} Q_m(-t), checked formally via coefficient parity.

    With the log branch continued through (t+1)/(t-1) -> reciprocal under
    t -> -t, i.e. L0(-t) = -L0(t), the identity amounts to A having the
    parity of m and B the opposite parity.
    """
    q = legendre_q(m)
    A_ref = sp.expand(q.A.subs(_t, -_t))
    B_ref = sp.expand(q.B.subs(_t, -_t))
    sign = (-1) ** (m + 1)
    return (sp.expand(-A_ref - sign * q.A) == 0) and (sp.expand(B_ref - sign * q.B) == 0)


@lru_cache(maxsize=None)
def q_tail_constant(m: int) -> float:
    """C_m with Q_m(t) <= C_m * t^{-(m+1)} for all t >= 2.

    t^{m+1} Q_m(t) is positive and decreasing toward its limit on
    [2, inf); the supremum on the ray is attained at t = 2, padded by 10%
    against roundoff.
    """
    ts = np.linspace(2.0, 400.0, 2000)
    vals = ts ** (m + 1) * eval_q_array(m, ts)
    return float(vals.max()) * 1.1
