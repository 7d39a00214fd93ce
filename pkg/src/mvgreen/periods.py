"""Elliptic period matrices, single-valued matrices, and CM algebraicity.

The de Rham basis is ([dx/y], [x dx/y]) on a Weierstrass model: the
second class has periods equal to minus the Weierstrass quasi-periods
(integrating the p-function around a cycle picks up -eta), which is the
sign making det P = +2*pi*i with tau = omega2/omega1 in the upper
half-plane.  Quasi-periods come from the weight-2 Eisenstein series:
eta1_dR = -pi^2 E2(tau) / (3 omega1), eta2_dR = tau * eta1_dR + 2*pi*i/omega1.

The single-valued matrix S = conj(P)^{-1} P is independent of the choice
of Betti basis, so any lattice basis with ratio in the upper half-plane
gives the same rho-bar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import mpmath as mp
from mpmath import mpc, mpf

from .cm import QuadForm, cm_point, class_number, reduced_forms
from .modular import eisenstein
from .numerics import MinPolyCandidate, find_min_poly

__all__ = [
    "PeriodMatrix",
    "DegenerateS",
    "periods_from_tau",
    "rho",
    "kummer_single_valued",
    "cm_curve_data",
    "cm_rho_algebraicity",
    "e2_value",
]


class DegenerateS(Exception):
    pass


@dataclass(frozen=True)
class PeriodMatrix:
    """P = [[omega1, eta1], [omega2, eta2]] with tau = omega2/omega1."""

    omega1: mpc
    omega2: mpc
    eta1: mpc
    eta2: mpc

    @property
    def tau(self) -> mpc:
        return self.omega2 / self.omega1

    def matrix(self) -> mp.matrix:
        return mp.matrix([[self.omega1, self.eta1], [self.omega2, self.eta2]])

    def det(self) -> mpc:
        return self.omega1 * self.eta2 - self.eta1 * self.omega2

    def legendre_defect(self) -> mpf:
        return abs(self.det() - 2j * mp.pi)

    def single_valued(self) -> mp.matrix:
        P = self.matrix()
        Pc = mp.matrix([[mp.conj(P[i, j]) for j in range(2)] for i in range(2)])
        return Pc ** -1 * P

    def sv_involution_defect(self) -> mpf:
        S = self.single_valued()
        Sc = mp.matrix([[mp.conj(S[i, j]) for j in range(2)] for i in range(2)])
        E = S * Sc
        return max(abs(E[0, 0] - 1), abs(E[0, 1]), abs(E[1, 0]), abs(E[1, 1] - 1))


def e2_value(tau, dps: Optional[int] = None) -> mpc:
    """E2(tau) by direct q-summation (coefficients 1 - 24 sigma_1(n) q^n)."""
    ctx = mp.workdps(dps) if dps else mp.workdps(mp.mp.dps)
    with ctx:
        tau = mpc(tau)
        y = tau.imag
        if y <= 0:
            raise ValueError("Im tau must be positive")
        digits = mp.mp.dps
        n_terms = int((digits + 8) * mp.log(10) / (2 * mp.pi * y)) + 12
        if n_terms > 40_000:
            raise ValueError("Im tau too small for direct E2 summation at this precision")
        series = eisenstein(2, n_terms).as_mpc()
        val, _ = series.evaluate(tau)
        return val


def periods_from_tau(tau, omega1, dps: int = 60) -> PeriodMatrix:
    """Period matrix of the lattice omega1 * (Z + tau Z) in the basis
    ([dx/y], [x dx/y]); det P = 2 pi i by construction *and* by the
    quasi-period identity (the two agree because eta2 of the Weierstrass
    zeta function equals tau*eta1 - 2 pi i on this lattice)."""
    with mp.workdps(dps):
        tau = mpc(tau)
        omega1 = mpc(omega1)
        if tau.imag <= 0:
            raise ValueError("Im tau must be positive")
        if omega1 == 0:
            raise ValueError("omega1 must be nonzero")
        eta1 = -mp.pi ** 2 * e2_value(tau) / (3 * omega1)
        eta2 = tau * eta1 + 2j * mp.pi / omega1
        return PeriodMatrix(omega1, tau * omega1, eta1, eta2)


def rho(P: PeriodMatrix) -> Tuple[mpc, mpc]:
    """(rho, rho-bar) from the single-valued matrix: rho = S11/S21."""
    w1, w2, e1, e2 = P.omega1, P.omega2, P.eta1, P.eta2
    denom = mp.conj(w1) * w2 - w1 * mp.conj(w2)
    if abs(denom) < mp.mpf(10) ** (-mp.mp.dps + 5) * max(abs(w1), abs(w2)) ** 2:
        raise DegenerateS("omega-periods are parallel; S21 vanishes")
    r = (w1 * mp.conj(e2) - mp.conj(e1) * w2) / denom
    rbar = (mp.conj(w1) * e2 - e1 * mp.conj(w2)) / (-denom)
    return r, rbar


def kummer_single_valued(x) -> mp.matrix:
    """Single-valued period matrix [[1, log|x|^2], [0, -1]] of a Kummer object."""
    x = mpc(x)
    if x == 0:
        raise ValueError("x must be nonzero")
    return mp.matrix([[1, mp.log(abs(x) ** 2)], [0, -1]])


# ---------------------------------------------------------------------------
# CM models over the field of j
# ---------------------------------------------------------------------------

def cm_curve_data(D: int, dps: int = 80):
    """(tau, omega1) for a Weierstrass model defined over Q(j(tau)).

    D = -4: y^2 = 4x^3 - 4x, square lattice, omega1 = pi / agm(sqrt 2, 1).
    D = -3: y^2 = 4x^3 - 4, rhombic lattice with tau = (1 + i sqrt 3)/2 and
    omega1 the real period (computed by quadrature after removing the
    endpoint singularity).
    Otherwise: the model y^2 = 4x^3 - c x - c with c = 27 j/(j - 1728) has
    j-invariant j; its lattice is lam * (Z + tau Z) with
    lam^2 = (2 pi)^2 E6(tau) g2 / (18 E4(tau) g3), so no quadrature is
    required and everything stays anchored to a model over Q(j).
    """
    with mp.workdps(dps + 10):
        forms = reduced_forms(D)
        Q = forms[0]
        tau = cm_point(Q, dps + 10)
        if D == -4:
            return mpc(0, 1), mp.pi / mp.agm(mp.sqrt(2), 1)
        if D == -3:
            tau3 = (1 + 1j * mp.sqrt(3)) / 2
            # omega1 = 2 int_1^oo dx / sqrt(4x^3-4); substitute x = 1 + u^2
            omega1 = 2 * mp.quad(lambda u: u / mp.sqrt((1 + u * u) ** 3 - 1), [0, mp.inf])
            return tau3, omega1
        e4 = _weight_series_value(4, tau)
        e6 = _weight_series_value(6, tau)
        # lattice lam*(Z+tau Z) with g2(lam) = g3(lam) = 27 j/(j-1728):
        # lam^2 = lam^6/lam^4 = (2 pi)^2 E6(tau) / (18 E4(tau)); the model
        # constant cancels, its role is to make lam^4 and lam^6 consistent
        lam_sq = (2 * mp.pi) ** 2 * e6 / (18 * e4)
        return tau, mp.sqrt(lam_sq)


def _weight_series_value(k: int, tau) -> mpc:
    digits = mp.mp.dps
    y = mpc(tau).imag
    n_terms = int((digits + 10) * mp.log(10) / (2 * mp.pi * y)) + 12
    val, _ = eisenstein(k, n_terms).as_mpc().evaluate(tau)
    return val


def cm_rho_algebraicity(D: int, digits: int = 80) -> Optional[MinPolyCandidate]:
    """Recognize rho-bar of the CM model of discriminant D as algebraic.

    Runs the LLL recognizer on rho-bar with degree bound 2 h(D); returns
    the candidate polynomial or None.
    """
    h = class_number(D)
    with mp.workdps(digits + 15):
        tau, omega1 = cm_curve_data(D, digits + 15)
        P = periods_from_tau(tau, omega1, digits + 15)
        _, rbar = rho(P)
    return find_min_poly(rbar, max_degree=2 * h, working_digits=digits)
