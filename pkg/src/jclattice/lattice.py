"""Lattice and state-preparation configuration.

A lattice is a 1d chain of M cavities, each hosting a single bosonic mode
truncated at n_max photons plus one two-level emitter. All energies are
measured in units of the hopping J and all rates are full decay rates
(photon number decays as exp(-kappa*t)). The model lives in the frame
rotating at the drive frequency, so only the detunings delta_c (cavity)
and delta_q (qubit) enter.

Local basis ordering, used everywhere in the package: within one site the
basis is |photon n, qubit q> with q in {down, up}, laid out photon-major,

    index = 2*n + q,   q = 0 (down), 1 (up),

and the full lattice basis is the Kronecker product over sites with site 0
varying slowest.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def default_fock_cutoff(n_photons):
    """Cutoff that keeps the truncated tail of a coherent-like occupation
    with mean n_photons below ~1e-6. Generous for Fock initial states."""
    n = float(n_photons)
    if n < 0:
        raise ConfigError("n_photons must be non-negative")
    return int(math.ceil(n + 6.0 * math.sqrt(n))) + 2


def _as_site_tuple(value, M, name, dtype=float):
    """Broadcast a scalar to all sites, or validate a length-M sequence."""
    if np.isscalar(value):
        return (dtype(value),) * M
    seq = tuple(dtype(v) for v in value)
    if len(seq) != M:
        raise ConfigError(f"{name} must be a scalar or a length-{M} sequence, got length {len(seq)}")
    return seq


@dataclass(frozen=True)
class LatticeConfig:
    """Static description of the chain.

    Parameters
    ----------
    M : number of sites (>= 1)
    J : hopping amplitude (> 0), the unit of energy
    delta_c, delta_q : cavity and qubit detunings from the drive
    g : per-site qubit-cavity coupling (scalar broadcasts to all sites)
    d : per-site coherent drive amplitude
    kappa : photon loss rate (full rate on the photon number)
    gamma : qubit relaxation rate
    n_max : per-site Fock cutoff; may be None for engines that do not
        build a Hilbert space (mean field)
    n_max_site : optional per-site cutoffs overriding n_max, for strongly
        inhomogeneous occupations
    periodic : close the chain into a ring (wrap bond added for M > 2)
    """

    M: int
    J: float = 1.0
    delta_c: float = 0.01
    delta_q: float = 0.01
    g: tuple = 0.0
    d: tuple = 0.0
    kappa: float = 0.0
    gamma: float = 0.0
    n_max: int = None
    n_max_site: tuple = None
    periodic: bool = False

    def __post_init__(self):
        if int(self.M) < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))
        if not self.J > 0:
            raise ConfigError(f"J must be positive, got {self.J}")
        object.__setattr__(self, "g", _as_site_tuple(self.g, self.M, "g"))
        object.__setattr__(self, "d", _as_site_tuple(self.d, self.M, "d"))
        if self.kappa < 0:
            raise ConfigError(f"kappa must be non-negative, got {self.kappa}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be non-negative, got {self.gamma}")
        if self.n_max is not None:
            if int(self.n_max) < 0:
                raise ConfigError(f"n_max must be >= 0, got {self.n_max}")
            object.__setattr__(self, "n_max", int(self.n_max))
        if self.n_max_site is not None:
            cuts = tuple(int(c) for c in self.n_max_site)
            if len(cuts) != self.M:
                raise ConfigError(f"n_max_site must have length M={self.M}, got {len(cuts)}")
            if any(c < 0 for c in cuts):
                raise ConfigError("n_max_site entries must be >= 0")
            object.__setattr__(self, "n_max_site", cuts)

    # Hilbert-space geometry -------------------------------------------------

    def site_cutoffs(self):
        """Per-site Fock cutoffs as a tuple of ints."""
        if self.n_max_site is not None:
            return self.n_max_site
        if self.n_max is None:
            raise ConfigError("n_max (or n_max_site) is required to build a Hilbert space")
        return (self.n_max,) * self.M

    def site_dims(self):
        """Per-site local dimensions 2*(cutoff+1)."""
        return tuple(2 * (c + 1) for c in self.site_cutoffs())

    def local_dim(self, site):
        return self.site_dims()[site]

    @property
    def dim(self):
        """Total Hilbert-space dimension."""
        out = 1
        for d in self.site_dims():
            out *= d
        return out

    def bonds(self):
        """Nearest-neighbour pairs (i, i+1); adds the wrap bond on a ring."""
        pairs = [(i, i + 1) for i in range(self.M - 1)]
        if self.periodic and self.M > 2:
            pairs.append((self.M - 1, 0))
        return pairs


@dataclass(frozen=True)
class ProductStateSpec:
    """Site-factorized initial state.

    photons : per-site photon occupation. For kind="fock" these must be
        integers; for kind="coherent" the entry N gives a coherent state
        of real amplitude sqrt(N).
    qubit_z : per-site qubit preparation, one of -0.5 (down), +0.5 (up)
        or 0.0 for the balanced superposition (|down> + |up>)/sqrt(2).
    coherent_tail_tol : maximum probability weight the coherent amplitude
        may lose to the Fock truncation before the state is rejected.
    """

    photons: tuple
    qubit_z: tuple
    kind: str = "fock"
    coherent_tail_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "photons", tuple(float(p) for p in self.photons))
        object.__setattr__(self, "qubit_z", tuple(float(q) for q in self.qubit_z))
        if self.kind not in ("fock", "coherent"):
            raise ConfigError(f"unknown state kind {self.kind!r}, expected 'fock' or 'coherent'")
        if len(self.photons) != len(self.qubit_z):
            raise ConfigError("photons and qubit_z must have equal length")
        for p in self.photons:
            if p < 0:
                raise ConfigError(f"photon occupations must be non-negative, got {p}")
            if self.kind == "fock" and p != int(p):
                raise ConfigError(f"fock occupations must be integers, got {p}")
        for q in self.qubit_z:
            if q not in (-0.5, 0.0, 0.5):
                raise ConfigError(f"qubit_z entries must be -0.5, 0.0 or +0.5, got {q}")
