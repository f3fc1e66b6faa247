"""Sampled observable records shared by all three engines."""

from dataclasses import dataclass, field

import numpy as np

POPULATION_FLOOR = 1e-10


def imbalance(populations, floor=POPULATION_FLOOR):
    """Alternating-sign normalized population imbalance.

    z = sum_i (-1)^(i+1) N_i / sum_i N_i with sites counted from 1, so
    odd sites enter with +. Returns NaN (missing sample) when the total
    population is below the floor.
    """
    N = np.asarray(populations, dtype=float)
    total = N.sum()
    if not total > floor:
        return float("nan")
    signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(len(N))])
    return float((signs * N).sum() / total)


def imbalance_series(N, floor=POPULATION_FLOOR):
    """Vectorized imbalance over an (n_samples, M) population array."""
    N = np.asarray(N, dtype=float)
    signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(N.shape[1])])
    total = N.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = (N * signs).sum(axis=1) / total
    z[~(total > floor)] = np.nan
    return z


@dataclass
class TimeSeries:
    """Uniformly sampled expectation values along one evolution.

    times : (n,) sample times, strictly increasing, uniform spacing
    N     : (n, M) per-site photon numbers
    sz    : (n, M) per-site qubit inversions
    z     : (n,) population imbalance, NaN where the total population
            vanished (missing sample)
    g2    : (n, M) equal-time second-order correlations, or None when
            not requested; NaN entries are missing samples
    *_err : standard errors, filled by trajectory ensembles and None
            for deterministic engines
    precision_limited : (n,) bool flags set by the mean-field engine for
            samples after the first step-size alarm, else None
    final_state : the evolved state object (engine specific), retrievable
            for chained runs
    truncation_peak : largest top-of-Fock-space population seen by the
            truncation monitor (0 for engines without one)
    """

    times: np.ndarray
    N: np.ndarray
    sz: np.ndarray
    z: np.ndarray
    g2: np.ndarray = None
    N_err: np.ndarray = None
    sz_err: np.ndarray = None
    z_err: np.ndarray = None
    g2_err: np.ndarray = None
    precision_limited: np.ndarray = None
    final_state: object = None
    truncation_peak: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self):
        return len(self.times)

    @property
    def n_sites(self):
        return self.N.shape[1]


def sample_grid(t_max, sample_dt):
    """Uniform sampling grid starting at t=0, endpoint included when
    t_max is an integer multiple of sample_dt."""
    if sample_dt <= 0 or t_max <= 0:
        raise ValueError("t_max and sample_dt must be positive")
    n = int(np.floor(t_max / sample_dt + 1e-9))
    return np.arange(n + 1) * sample_dt
