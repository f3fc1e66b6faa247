"""Chebyshev expansion coefficients for exp(-i A t) with A scaled to [-1, 1].

For a generator whose spectrum lies in a thin strip around the real
interval [-R, R], exp(-iAt) = sum_k c_k T_k(A/R) with
c_k = (2 - delta_k0) (-i)^k J_k(R t).  The Bessel tail dies
superexponentially once k exceeds R t, which is what makes the expansion
cheap: the number of terms tracks the physical bandwidth-time product
instead of a per-step error bound.
"""

import numpy as np
from scipy.special import jv

from .errors import IntegrationError

MAX_TERMS = 200_000


class ChebDiverged(Exception):
    """Internal: iterate norm blew past the guard, spectral bound too small."""


def coefficients(z, tail_tol):
    """Expansion coefficients for phase z = R*t, truncated adaptively.

    Keeps terms until three consecutive coefficients beyond k = z fall
    below tail_tol (the coefficients oscillate before that point, so a
    single small value is not evidence of convergence).
    """
    kmax = int(z + 12 + 9.0 * z ** (1.0 / 3.0)) + 24
    while kmax <= MAX_TERMS:
        ks = np.arange(kmax + 1)
        coefs = 2.0 * (-1j) ** (ks % 4) * jv(ks, z)
        coefs[0] *= 0.5
        absc = np.abs(coefs)
        start = max(int(np.ceil(z)), 2)
        for k in range(start, kmax - 1):
            if absc[k] < tail_tol and absc[k + 1] < tail_tol and absc[k + 2] < tail_tol:
                return coefs[:k + 1]
        kmax = int(kmax * 1.5) + 16
    raise IntegrationError(
        "Chebyshev expansion failed to converge; spectral bound suspect")
