"""Numerical and exact verification tools for smooth solitary waves of the b-family.

Subpackages:

* ``params``      wave parameters, kernel functions A, B, f and the phase-plane systems
* ``exactpoly``   exact rational polynomials, resultants and Sturm certificates
* ``quadrature``  level-curve integrals for Q and its h-derivative
* ``profile``     physical wave profiles and the momentum density
* ``pdesim``      pseudo-spectral evolution and orbital distance
* ``cli``         the ``bchlab`` command line
"""

__version__ = "0.1.0"
