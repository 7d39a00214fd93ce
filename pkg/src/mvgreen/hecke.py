"""Hecke operators T_n on weight-(k+2) functions and cusp-form relations.

Normalization is det(alpha)^{k+1} sum_i j_{beta_i}(z)^{-(k+2)} f(beta_i z)
throughout; the classical m^{k/2-1}-style normalizations are not used
anywhere.  On q-expansions this gives
a_{T_n f}(M) = sum_{a | (n, M)} a^{k+1} a_f(M n / a^2).
Relation vectors are solved exactly over the rationals against the level-1
cusp basis Delta * E4^a E6^b.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Callable, List, Sequence, Tuple

from .modular import IntMatrix2, QSeries, delta_and_j, eisenstein

__all__ = [
    "HeckeCombo",
    "NoRelation",
    "hecke_cosets",
    "apply_hecke",
    "apply_hecke_to_qseries",
    "relation_vector",
    "cusp_basis",
]


class NoRelation(Exception):
    """n_max is too small for the cusp dimension in this weight."""


@dataclass(frozen=True)
class HeckeCombo:
    """A finite combination sum_n lambda_n T_n acting in a fixed weight."""

    terms: Tuple[Tuple[int, Fraction], ...]
    weight: int

    @staticmethod
    def identity(weight: int) -> "HeckeCombo":
        return HeckeCombo(((1, Fraction(1)),), weight)

    @property
    def is_identity(self) -> bool:
        return self.terms == ((1, Fraction(1)),)

    def __str__(self):
        parts = [f"{lam}*T_{n}" for n, lam in self.terms]
        return " + ".join(parts) + f"  (weight {self.weight})"


@lru_cache(maxsize=None)
def hecke_cosets(n: int) -> Tuple[IntMatrix2, ...]:
    """Right-coset representatives (a, b; 0, d), ad = n, 0 <= b < d.

    For SL2(Z) these represent Gamma alpha Gamma = union Gamma beta_i;
    there are sigma_1(n) of them.
    """
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    for a in range(1, n + 1):
        if n % a:
            continue
        d = n // a
        for b in range(d):
            out.append(IntMatrix2(a, b, 0, d))
    return tuple(out)


def apply_hecke(T: HeckeCombo, f: Callable, z):
    """(T f)(z) = sum_n lambda_n n^{k+1} sum_beta j_beta(z)^{-(k+2)} f(beta z)."""
    weight = T.weight
    total = 0
    for n, lam in T.terms:
        acc = 0
        for beta in hecke_cosets(n):
            acc += f(beta.act(z)) / beta.j(z) ** weight
        total += Fraction(lam) * n ** (weight - 1) * acc if isinstance(acc, Fraction) \
            else float(lam) * n ** (weight - 1) * acc
    return total


def apply_hecke_to_qseries(n: int, f: QSeries, weight: int) -> QSeries:
    """T_n on a q-expansion: a_{T_n f}(M) = sum_{a|(n,M)} a^{weight-1} a_f(Mn/a^2).

    Exact when the input coefficients are exact.  Valid truncation order:
    coefficients of T_n f up to order N require a_f up to N*n.
    """
    if f.leading_exponent < 0:
        raise ValueError("Hecke action implemented for series without principal part")
    order = f.truncation_order // n
    coeffs = []
    for M in range(order):
        acc = 0
        for a in _divisors(gcd(n, M)):  # gcd(n, 0) = n handles the constant term
            idx = M * n // (a * a)
            if f.leading_exponent <= idx < f.truncation_order:
                acc += a ** (weight - 1) * f.coeff(idx)
        coeffs.append(acc)
    return QSeries(0, coeffs, order, f.cusp_width)


def apply_combo_to_qseries(T: HeckeCombo, f: QSeries) -> QSeries:
    out = None
    for n, lam in T.terms:
        g = apply_hecke_to_qseries(n, f, T.weight) * lam
        out = g if out is None else out + g
    return out


def _divisors(n: int) -> List[int]:
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)


# ---------------------------------------------------------------------------
# Cusp bases and relation vectors (level 1)
# ---------------------------------------------------------------------------

def cusp_basis(weight: int, order: int) -> List[QSeries]:
    """Monomial basis Delta * E4^a E6^b of the level-1 cusp space."""
    if weight % 2 or weight < 0:
        return []
    delta, _ = delta_and_j(order)
    basis = []
    rem = weight - 12
    if rem < 0:
        return []
    for b in range(rem // 6 + 1):
        rest = rem - 6 * b
        if rest % 4 == 0:
            a = rest // 4
            f = delta
            for _ in range(a):
                f = f * eisenstein(4, order)
            for _ in range(b):
                f = f * eisenstein(6, order)
            basis.append(f.truncate(order))
    # second-layer cusp forms (weight >= 24) via Delta^2 etc. are generated
    # by the same monomials; the list above already spans since E4, E6
    # generate the full graded ring
    return basis


def relation_vector(weight: int, n_max: int) -> HeckeCombo:
    """lambda with sum_n lambda_n T_n annihilating all weight-``weight`` cusp forms.

    Solves sum_n lambda_n a_f(n) = 0 exactly for the basis f; when there
    are no cusp forms, returns the identity operator T_1.  The vector is
    normalized primitive-integral with positive last entry.
    """
    if weight < 4 or weight % 2:
        raise ValueError("weight must be even and >= 4")
    basis = cusp_basis(weight, n_max + 2)
    if not basis:
        return HeckeCombo.identity(weight)
    dim = len(basis)
    if n_max <= dim:
        raise NoRelation(f"need n_max > dim S_{weight} = {dim}")
    # rows: for each basis form, the vector (a_f(1), ..., a_f(n_max))
    rows = [[Fraction(f.coeff(n)) for n in range(1, n_max + 1)] for f in basis]
    null = _nullspace(rows, n_max)
    if not null:
        raise NoRelation("no relation found; increase n_max")
    lam = null[0]
    # clear denominators, make primitive, last nonzero positive
    from math import lcm

    den = 1
    for x in lam:
        den = lcm(den, x.denominator)
    ints = [int(x * den) for x in lam]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints]
    last = next(x for x in reversed(ints) if x != 0)
    if last < 0:
        ints = [-x for x in ints]
    terms = tuple((n + 1, Fraction(c)) for n, c in enumerate(ints) if c != 0)
    return HeckeCombo(terms, weight)


def _nullspace(rows: List[List[Fraction]], ncols: int) -> List[List[Fraction]]:
    """Exact rational nullspace vectors of the row matrix."""
    mat = [row[:] for row in rows]
    nrows = len(mat)
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for rr in range(r, nrows):
            if mat[rr][c] != 0:
                pivot = rr
                break
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for rr in range(nrows):
            if rr != r and mat[rr][c] != 0:
                factor = mat[rr][c]
                mat[rr] = [x - factor * y for x, y in zip(mat[rr], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    out = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            vec[pc] = -mat[ri][fc]
        out.append(vec)
    return out
