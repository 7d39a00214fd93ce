"""High-precision numerics for automorphic Green's functions.

The package evaluates rational Poincare series, reproducing kernels and
matrix-valued higher Green's functions on the upper half-plane, verifies
the closed-form identities relating them, and tests log-algebraicity of
Hecke-modified Green's function values at CM points by integer-relation
detection.

Layout:

- ``numerics``   precision model, numerical differentiation, contour
  integration, LLL-based algebraic-number recognition
- ``modular``    q-expansions (E2, E4, E6, Delta, j), SL2(Z) machinery,
  fundamental-domain reduction, bottom-row enumeration
- ``legendre``   Legendre functions of the second kind, exactly
- ``poincare``   the local kernels psi^{p,q} and their group averages
- ``green``      local and averaged matrix Green's functions
- ``hecke``      Hecke operators and cusp-form relation vectors
- ``cm``         binary quadratic forms and CM points
- ``periods``    elliptic period matrices and single-valued matrices
- ``lift``       exponentially convergent central Green's values (level 1)
- ``gz``         end-to-end log-algebraicity reports
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
