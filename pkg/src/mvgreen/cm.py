"""Binary quadratic forms, CM points, and quadratic-form lattice sums.

A primitive positive-definite form (A, B, C) of discriminant D < 0
corresponds to the CM point w(Q) = (-B + sqrt(D)) / (2A); the class sum
of R(z,1)^{-(m+1)} over a form class reproduces the diagonal Poincare
series Psi^{m,m} up to the explicit sqrt(D)-prefactor, which serves as an
independent cross-oracle in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, isqrt
from typing import List, Tuple

import mpmath as mp
import numpy as np
from mpmath import mpc, mpf

from .modular import CongruenceGroup, IntMatrix2, SL2Z
from .poincare import TruncationPolicy, _centered_rep, _sum_rows, _inner_tail, _row_tail

__all__ = [
    "QuadForm",
    "BadDiscriminant",
    "RootCollision",
    "reduced_forms",
    "reduced_forms_bruteforce",
    "cm_point",
    "class_number",
    "paloma_series",
]


class BadDiscriminant(Exception):
    pass


class RootCollision(Exception):
    pass


@dataclass(frozen=True)
class QuadForm:
    """Integral binary quadratic form A U^2 + B UV + C V^2."""

    A: int
    B: int
    C: int

    @property
    def D(self) -> int:
        return self.B * self.B - 4 * self.A * self.C

    def __post_init__(self):
        if self.D >= 0:
            raise BadDiscriminant(f"discriminant {self.D} is not negative")
        if self.A <= 0:
            raise ValueError("positive-definite form requires A > 0")
        if gcd(gcd(self.A, self.B), self.C) != 1:
            raise ValueError("form is not primitive")

    def __call__(self, u, v):
        return self.A * u * u + self.B * u * v + self.C * v * v

    def is_reduced(self) -> bool:
        if not (abs(self.B) <= self.A <= self.C):
            return False
        if abs(self.B) == self.A or self.A == self.C:
            return self.B >= 0
        return True

    def act(self, gamma: IntMatrix2) -> "QuadForm":
        """Q|_gamma(u, v) = Q(a u + b v, c u + d v)."""
        a, b, c, d = gamma.entries()
        A2 = self(a, c)
        C2 = self(b, d)
        B2 = 2 * self.A * a * b + self.B * (a * d + b * c) + 2 * self.C * c * d
        return QuadForm(A2, B2, C2)


def _check_disc(D: int):
    if D >= 0 or D % 4 not in (0, 1):
        raise BadDiscriminant(f"{D} is not a negative discriminant (needs D < 0, D = 0,1 mod 4)")


def reduced_forms(D: int) -> List[QuadForm]:
    """All reduced primitive forms of discriminant D; count = h(D).

    Reduced means |B| <= A <= C with B >= 0 when |B| = A or A = C.
    """
    _check_disc(D)
    out = []
    b_limit = isqrt(-D // 3) + 1
    for B in range(-b_limit, b_limit + 1):
        if (B - D) % 2:
            continue
        ac4 = B * B - D
        if ac4 % 4:
            continue
        ac = ac4 // 4
        a = max(abs(B), 1)
        while a * a <= ac:
            if a != 0 and ac % a == 0:
                A, C = a, ac // a
                if abs(B) <= A <= C and gcd(gcd(A, B), C) == 1:
                    q = QuadForm(A, B, C)
                    if q.is_reduced():
                        out.append(q)
            a += 1
    out.sort(key=lambda q: (q.A, q.B, q.C))
    return out


def reduced_forms_bruteforce(D: int) -> List[QuadForm]:
    """Form enumeration by scanning the full (A, B, C) box; test oracle."""
    _check_disc(D)
    out = []
    bound = isqrt(-D) + 2
    for A in range(1, bound + 1):
        for B in range(-bound, bound + 1):
            num = B * B - D
            if num % (4 * A):
                continue
            C = num // (4 * A)
            if gcd(gcd(A, B), C) != 1:
                continue
            q = QuadForm(A, B, C)
            if q.is_reduced():
                out.append(q)
    out.sort(key=lambda q: (q.A, q.B, q.C))
    return out


def class_number(D: int) -> int:
    return len(reduced_forms(D))


def cm_point(Q: QuadForm, dps: int = None):
    """The upper half-plane root w(Q) = (-B + sqrt(D)) / (2A)."""
    if dps is None:
        return complex(-Q.B, (-Q.D) ** 0.5) / (2 * Q.A)
    with mp.workdps(dps):
        return mpc(-Q.B, mp.sqrt(-Q.D)) / (2 * Q.A)


def paloma_series(
    Q: QuadForm,
    m: int,
    z,
    policy: TruncationPolicy,
    group: CongruenceGroup = SL2Z,
):
    """sqrt(D)^{m+1}/(w-wbar)^m * sum_{gamma} Q|_gamma(z,1)^{-(m+1)}.

    The group sum runs over the same bottom-row shells as the Poincare
    module (translates T^n gamma_0 change the form), so truncations can be
    matched exactly in cross-checks against Psi^{m,m}(z, w(Q)).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    zc = complex(z)
    w = cm_point(Q)
    rows, mult = _sum_rows(group, policy.row_bound)
    M = policy.translation_bound
    ns = np.arange(-M, M + 1)
    total = 0.0 + 0.0j
    for (_, rep0) in rows:
        rep = _centered_rep(rep0, zc, w)
        R = Q.act(rep)
        # Q|_{T^n rep}(z, 1) = R(z + n, 1) since (T^n rep) acts first by rep
        # ... careful: Q|_{T^n rep} = (Q|_{T^n})|_rep; translate on the left:
        # value at (z,1): Q((T^n rep) . (z,1)^t-style) - computed directly below
        a, b, c, d = rep.entries()
        # Q|_{T^n rep}(z,1) = Q(a z + b + n(c z + d), c z + d)
        top = a * zc + b + ns * (c * zc + d)
        bot = c * zc + d
        vals = Q.A * top * top + Q.B * top * bot + Q.C * bot * bot
        if np.any(np.abs(vals) < 1e-12):
            raise RootCollision("z is a root of a form in the class")
        total += (1.0 / vals ** (m + 1)).sum()
    total *= mult
    sqrtD = complex(0, (-Q.D) ** 0.5)
    wbar = w.conjugate()
    scale = sqrtD ** (m + 1) / (w - wbar) ** m
    k = 2 * m
    tail = abs(scale) * (
        len(rows) * mult * _inner_tail(k, M, w) / abs(w - wbar)
        + _row_tail(k, policy.row_bound, zc, w) / abs(w - wbar)
    )
    return scale * total, tail
