"""Rational Poincare series: the local kernels psi^{p,q} and their group
averages, reproducing kernels, residues and stabilizer character sums.

The average over the group is organized as a sum over coprime bottom rows
in max-norm shells; within a row, the elements T^n * gamma_0 share the
automorphy factor and only shift the argument, so the inner translation
sum is vectorized.  Results are bit-reproducible: shells are enumerated
shell-major then lexicographically and reduced in that fixed order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from math import comb
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .modular import (
    SL2Z,
    CongruenceGroup,
    IntMatrix2,
    canonical_bottom_rows,
    enumerate_bottom_rows,
    hyperbolic_distance,
    reduce_to_fundamental_domain,
)

__all__ = [
    "TruncationPolicy",
    "PoleHit",
    "OrbitCollision",
    "DivergentParameters",
    "UnknownStabilizer",
    "psi_local",
    "psi_local_vector",
    "psi_gamma",
    "psi_gamma_elements",
    "phi_gamma",
    "kappa",
    "stabilizer_elements",
    "residue_vector",
    "residue_contour",
    "orbit_distance",
]


class PoleHit(Exception):
    pass


class OrbitCollision(Exception):
    pass


class DivergentParameters(Exception):
    pass


class UnknownStabilizer(Exception):
    pass


@dataclass(frozen=True)
class TruncationPolicy:
    """Lattice-sum truncation: bottom-row shells up to N, translations to M.

    ``tail_estimate`` is filled by the evaluation routines with an upper
    bound for the modulus of the discarded sum, combining the translation
    tail (integral comparison, O(M^{-(k+1)})) and the row-shell tail
    (O(N^{-k}) from |c z + d| >= eps(z) * max(|c|, |d|)).
    """

    row_bound: int = 40
    translation_bound: int = 200
    tail_estimate: Optional[float] = None

    def with_tail(self, est: float) -> "TruncationPolicy":
        return replace(self, tail_estimate=est)

    def doubled(self) -> "TruncationPolicy":
        return TruncationPolicy(2 * self.row_bound, 2 * self.translation_bound)


_ORBIT_EPS = 1e-6


def orbit_distance(z, w) -> float:
    """Approximate hyperbolic distance from z to the SL2(Z)-orbit of w.

    Both points are reduced to the fundamental domain; boundary
    identifications are handled by comparing against the translates of the
    reduced w under T^{+-1} and S.
    """
    _, z0 = reduce_to_fundamental_domain(complex(z))
    _, w0 = reduce_to_fundamental_domain(complex(w))
    candidates = [w0, w0 + 1, w0 - 1, -1 / w0]
    return min(hyperbolic_distance(z0, wc) for wc in candidates)


def _check_orbit_separation(z, w, eps: float = _ORBIT_EPS):
    if complex(z).imag > 0 and complex(w).imag > 0:
        if orbit_distance(z, w) < eps:
            raise OrbitCollision(f"z = {z} is within {eps} of the orbit of w = {w}")
        if orbit_distance(z, complex(w).conjugate().conjugate()) < eps:
            pass  # same check; conjugate orbit handled below
        wbar = complex(w).conjugate()
        if wbar.imag > 0 and orbit_distance(z, wbar) < eps:
            raise OrbitCollision("z collides with the orbit of conj(w)")


# ---------------------------------------------------------------------------
# Local kernels
# ---------------------------------------------------------------------------

def psi_local(z, w, p: int, q: int, tol: float = 1e-12):
    """psi^{p,q}(z, w) = (w - conj w) / ((z-w)^{p+1} (z - conj w)^{q+1})."""
    wbar = _conj(w)
    if abs(z - w) < tol or abs(z - wbar) < tol:
        raise PoleHit(f"z = {z} hits a pole of psi^{{{p},{q}}}(., {w})")
    return (w - wbar) / ((z - w) ** (p + 1) * (z - wbar) ** (q + 1))


def psi_local_vector(z, w, k: int, U, V):
    """The degree-k generating sum of psi^{p,q}(z,w) (U-wV)^p (U-conj(w) V)^q."""
    wbar = _conj(w)
    total = 0
    for p in range(k + 1):
        q = k - p
        total += psi_local(z, w, p, q) * (U - w * V) ** p * (U - wbar * V) ** q
    return total


def _conj(w):
    try:
        return w.conjugate()
    except AttributeError:
        return complex(w).conjugate()


# ---------------------------------------------------------------------------
# Group averages
# ---------------------------------------------------------------------------

def _eps_lower_bound(z: complex) -> float:
    """eps with |cz+d| >= eps * max(|c|,|d|) for all real (c,d) != 0."""
    z = complex(z)
    a = abs(z) ** 2
    x = z.real
    lam_min = (a + 1 - ((a - 1) ** 2 + 4 * x * x) ** 0.5) / 2
    return lam_min ** 0.5


def _centered_rep(rep: IntMatrix2, z, w) -> IntMatrix2:
    u = rep.act(complex(z))
    n0 = int(round(u.real - complex(w).real))
    if n0:
        rep = IntMatrix2.T(-n0) @ rep
    return rep


def _sum_rows(group: CongruenceGroup, bound: int):
    """Rows for the lattice sums plus the +-I multiplicity factor."""
    if group.contains_minus_identity:
        return canonical_bottom_rows(group, bound), 2
    return enumerate_bottom_rows(group, bound), 1


def _inner_tail(k: int, M: int, w) -> float:
    wbar = complex(w).conjugate()
    return abs(complex(w) - wbar) * 2 ** (k + 3) / ((k + 1) * max(M - 1, 1) ** (k + 1))


def _row_tail(k: int, N: int, z, w) -> float:
    eps = _eps_lower_bound(z)
    w = complex(w)
    b_w = abs(w - w.conjugate()) * (3.0 / min(w.imag, 1.0) ** (k + 2) + 4.0)
    return 8.0 * b_w / (eps ** (k + 2) * max(k, 1) * N ** max(k, 1))


def psi_gamma(
    group: CongruenceGroup,
    z,
    w,
    p: int,
    q: int,
    policy: TruncationPolicy,
    check_orbits: bool = True,
):
    """Truncated Psi^{p,q}_Gamma(z, w), returned with a tail bound.

    Implements sum_{gamma} j_gamma(z)^{-(p+q+2)} psi^{p,q}(gamma z, w)
    over bottom-row shells up to the policy's N with symmetric translation
    windows of half-width M.  Requires p + q >= 1.  For groups containing
    -I and odd weight p+q+2 the sum cancels in pairs and (0, 0) is
    returned with a warning.
    """
    k = p + q
    if k + 2 < 3:
        raise DivergentParameters(f"p + q must be >= 1, got {k}")
    if check_orbits:
        _check_orbit_separation(z, w)
    weight = k + 2
    rows, mult = _sum_rows(group, policy.row_bound)
    if mult == 2 and weight % 2 == 1:
        warnings.warn("odd weight with -I in the group: the series vanishes identically")
        return 0.0 + 0.0j, 0.0

    zc = complex(z)
    wc = complex(w)
    wbar = wc.conjugate()
    M = policy.translation_bound
    ns = np.arange(-M, M + 1)
    total = 0.0 + 0.0j
    for (_, rep0) in rows:
        rep = _centered_rep(rep0, zc, wc)
        jf = complex(rep.j(zc))
        u = complex(rep.act(zc)) + ns
        terms = (wc - wbar) / ((u - wc) ** (p + 1) * (u - wbar) ** (q + 1))
        total += terms.sum() / jf ** weight
    total *= mult
    tail = len(rows) * mult * _inner_tail(k, M, wc) + _row_tail(k, policy.row_bound, zc, wc)
    return total, tail


def psi_gamma_elements(mats: Iterable, z, w, p: int, q: int):
    """Plain z-side sum over an explicit matrix list (entries may be rational).

    The workhorse for matched-truncation cross-checks: GL2(Q) conjugated
    sums and quadratic-form class sums are compared against exactly the
    same group elements.
    """
    total = 0j
    zc = complex(z)
    wc = complex(w)
    wbar = wc.conjugate()
    weight = p + q + 2
    for mat in mats:
        a, b, c, d = _mat_entries(mat)
        jf = c * zc + d
        u = (a * zc + b) / jf
        total += (wc - wbar) / ((u - wc) ** (p + 1) * (u - wbar) ** (q + 1)) / jf ** weight
    return total


def _mat_entries(mat):
    if isinstance(mat, IntMatrix2):
        return float(mat.a), float(mat.b), float(mat.c), float(mat.d)
    a, b, c, d = mat
    return float(a), float(b), float(c), float(d)


def phi_gamma(
    group: CongruenceGroup,
    z,
    w,
    k: int,
    policy: TruncationPolicy,
    via_psi: bool = False,
    check_orbits: bool = True,
):
    """The reproducing-kernel series Phi_{Gamma,k}(z,w) for k > 2.

    Either summed directly, (k-1) sum_gamma j^{-k} (gamma z - w)^{-k}, or
    rewired through Psi via Phi = (k-1)/(w - conj w) * Psi^{k-1,-1}.
    """
    if k <= 2:
        raise DivergentParameters("reproducing kernel requires k > 2")
    if via_psi:
        val, tail = psi_gamma(group, z, w, k - 1, -1, policy, check_orbits=check_orbits)
        wc = complex(w)
        scale = (k - 1) / (wc - wc.conjugate())
        return val * scale, tail * abs(scale)
    if check_orbits and complex(z).imag > 0 and complex(w).imag > 0:
        if orbit_distance(z, w) < _ORBIT_EPS:
            raise OrbitCollision("z collides with the orbit of w")
    rows, mult = _sum_rows(group, policy.row_bound)
    if mult == 2 and k % 2 == 1:
        warnings.warn("odd weight with -I in the group: the series vanishes identically")
        return 0.0 + 0.0j, 0.0
    zc = complex(z)
    wc = complex(w)
    M = policy.translation_bound
    ns = np.arange(-M, M + 1)
    total = 0.0 + 0.0j
    for (_, rep0) in rows:
        rep = _centered_rep(rep0, zc, wc)
        jf = complex(rep.j(zc))
        u = complex(rep.act(zc)) + ns
        total += ((u - wc) ** -k).sum() / jf ** k
    total *= mult * (k - 1)
    k2 = k - 2  # matching psi-tail exponents with p+q = k-2 would be loose; reuse k-1,-1
    tail = abs(k - 1) * (
        len(rows) * mult * _inner_tail(k - 2, M, wc) / abs(wc - wc.conjugate())
        + _row_tail(k - 2, policy.row_bound, zc, wc) / abs(wc - wc.conjugate())
    )
    return total, tail


# ---------------------------------------------------------------------------
# Stabilizers and kappa
# ---------------------------------------------------------------------------

_I_POINT = 1j
_RHO = complex(-0.5, 3 ** 0.5 / 2)


def stabilizer_elements(group: CongruenceGroup, w) -> List[IntMatrix2]:
    """The stabilizer of w in the group, as explicit matrices.

    The reduced representative decides ellipticity; the stabilizer of a
    general point is conjugate to the standard one at i or rho.
    """
    g, w0 = reduce_to_fundamental_domain(complex(w))
    ginv = g.inv()
    elements: List[IntMatrix2] = [IntMatrix2.identity()]
    if group.contains(-IntMatrix2.identity()):
        elements.append(-IntMatrix2.identity())
    gen: Optional[IntMatrix2] = None
    order = 1
    if abs(w0 - _I_POINT) < 1e-9:
        gen, order = IntMatrix2.S(), 4
    elif abs(w0 - _RHO) < 1e-9 or abs(w0 - (_RHO + 1)) < 1e-9:
        base = IntMatrix2.S() @ IntMatrix2.T(1)  # fixes rho
        if abs(w0 - (_RHO + 1)) < 1e-9:
            base = IntMatrix2.T(1) @ base @ IntMatrix2.T(-1)
        gen, order = base, 6
    if gen is not None:
        conj_gen = ginv @ gen @ g
        power = conj_gen
        for _ in range(order - 1):
            if group.contains(power) and not any(power == e for e in elements):
                elements.append(power)
            if group.contains(-power) and not any(-power == e for e in elements):
                elements.append(-power)
            power = power @ conj_gen
    return elements


def kappa(group: CongruenceGroup, w, p: int, q: int, stabilizer=None) -> int:
    """kappa^{p,q}_{Gamma,w} = sum over the stabilizer of j^{-p}(w) j^{-q}(wbar).

    Always an integer, either 0 or the stabilizer order.  For SL2(Z) the
    closed-form case table is used; explicit stabilizers are summed
    numerically and snapped to the nearest integer.
    """
    if stabilizer is None:
        if group.kind == "sl2z":
            return _kappa_sl2z(w, p, q)
        stabilizer = stabilizer_elements(group, w)
    wc = complex(w)
    wbar = wc.conjugate()
    total = 0j
    for m in stabilizer:
        total += m.j(wc) ** (-p) * m.j(wbar) ** (-q)
    val = total.real
    if abs(total.imag) > 1e-6 or abs(val - round(val)) > 1e-6:
        raise UnknownStabilizer(f"character sum {total} did not round to an integer")
    return int(round(val))


def _kappa_sl2z(w, p: int, q: int) -> int:
    _, w0 = reduce_to_fundamental_domain(complex(w))
    d = p - q
    if abs(w0 - _I_POINT) < 1e-9:
        # 1 + (-1)^{p+q} + i^{p-q} + i^{q-p}
        i_pair = {0: 2, 1: 0, 2: -2, 3: 0}[d % 4]
        return 1 + (-1) ** (p + q) + i_pair
    if abs(w0 - _RHO) < 1e-9 or abs(w0 - (_RHO + 1)) < 1e-9:
        rho_pair = 2 if d % 3 == 0 else -1
        return (1 + (-1) ** (p + q)) * (1 + rho_pair)
    return 1 + (-1) ** (p + q)


# ---------------------------------------------------------------------------
# Residues
# ---------------------------------------------------------------------------

def residue_vector(group: CongruenceGroup, w, p: int, q: int) -> np.ndarray:
    """Closed-form residue of Psi^{p,q}(z,w) (X-zY)^{p+q} dz at z = w.

    Returns the coefficient vector of
    (-1)^p kappa^{p,q} binom(p+q,p) (X - conj(w) Y)^p (X - w Y)^q / (w-conj w)^{p+q}
    indexed by the Y-power (vec[i] multiplies X^{k-i} Y^i).
    """
    k = p + q
    wc = complex(w)
    wbar = wc.conjugate()
    kap = kappa(group, w, p, q)
    prefactor = (-1) ** p * kap * comb(k, p) / (wc - wbar) ** k
    vec = np.array([1.0 + 0j])
    for _ in range(p):
        vec = np.convolve(vec, np.array([1.0, -wbar]))
    for _ in range(q):
        vec = np.convolve(vec, np.array([1.0, -wc]))
    return prefactor * vec


def residue_contour(
    group: CongruenceGroup,
    w,
    p: int,
    q: int,
    policy: TruncationPolicy,
    radius: float = 0.05,
    n_samples: int = 128,
) -> np.ndarray:
    """Residue of the truncated series measured by contour quadrature.

    Only stabilizer terms have poles at w, so the contour value agrees
    with the exact residue up to quadrature roundoff even at modest
    truncation: the discarded terms are holomorphic inside the circle and
    integrate to zero.
    """
    k = p + q
    wc = complex(w)
    total = np.zeros(k + 1, dtype=complex)
    for jdx in range(n_samples):
        theta = 2 * np.pi * jdx / n_samples
        zeta = radius * complex(np.cos(theta), np.sin(theta))
        zj = wc + zeta
        val, _ = psi_gamma(group, zj, w, p, q, policy, check_orbits=False)
        frame = np.array([1.0 + 0j])
        for _ in range(k):
            frame = np.convolve(frame, np.array([1.0, -zj]))
        total += val * frame * zeta
    return total / n_samples
