"""Monte-Carlo wavefunction unraveling of the dissipative lattice dynamics.

Between jumps the state follows the non-unitary Schroedinger equation
with H_eff = H - (i/2) sum_k C_k^+ C_k, so its squared norm is the
survival probability.  We use the waiting-time formulation: draw r
uniform in (0,1), propagate until ||psi||^2 crosses r, bisect the
crossing time, apply a collapse operator chosen with probability
proportional to <psi|C_k^+ C_k|psi>, renormalize, redraw.  Jump times are
therefore located to jump_time_tol independently of any step size.

Deterministic segments are propagated by the Chebyshev expansion of
exp(-i H_eff dt) (see _cheb), with the spectrum centred and scaled using
the Hermitian part of H_eff.  The state is renormalized and r redrawn at
every sample boundary; by the Markov property this leaves the trajectory
statistics unchanged and keeps norms well conditioned.

Ensemble means are accumulated in trajectory order (seed = base_seed + k
for trajectory k), so results are bit-identical for a fixed base_seed no
matter how many worker processes participate.
"""

import multiprocessing as mp
import time as _time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.linalg import eigsh
from scipy.sparse.linalg import norm as sp_norm

from . import _cheb
from .errors import ConfigError, IntegrationError, TruncationError
from .lattice import LatticeConfig, ProductStateSpec
from .master import EvolutionSettings
from .operators import (
    EmbeddedOperator,
    build_collapse_operators,
    build_hamiltonian,
    product_state,
    site_photon_numbers,
    site_qubit_excitations,
)
from .timeseries import POPULATION_FLOOR, TimeSeries, imbalance, imbalance_series, sample_grid

_DENSE_EIG_LIMIT = 2048
_MAX_JUMPS_PER_INTERVAL = 100_000


@dataclass
class TrajectorySettings:
    """Stochastic-engine knobs; the time grid comes from EvolutionSettings."""

    n_traj: int
    base_seed: int = 0
    jump_time_tol: float = 1e-6
    rtol: float = 1e-6
    atol: float = 1e-9
    workers: int = 1

    def __post_init__(self):
        if self.n_traj < 1:
            raise ConfigError("n_traj must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for name in ("jump_time_tol", "rtol", "atol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


def effective_hamiltonian(hamiltonian, collapse_ops):
    """H - (i/2) sum_k C_k^+ C_k as an EmbeddedOperator (non-Hermitian)."""
    H = hamiltonian.matrix if isinstance(hamiltonian, EmbeddedOperator) else hamiltonian
    A = H.tocsr().astype(np.complex128)
    for op in collapse_ops:
        C = op.matrix if isinstance(op, EmbeddedOperator) else op
        if C.shape != A.shape:
            raise ConfigError("collapse operator dimension does not match the Hamiltonian")
        A = A - 0.5j * (C.conj().T @ C)
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return EmbeddedOperator(matrix=A, site=None)


def _extract_channels(collapse_ops):
    channels = []
    for op in collapse_ops:
        C = (op.matrix if isinstance(op, EmbeddedOperator) else op).tocsr()
        C.sum_duplicates()
        C.sort_indices()
        nnz_row = np.diff(C.indptr)
        if nnz_row.max(initial=0) > 1:
            raise AssertionError("collapse operator is not single-entry-per-row")
        rows = np.flatnonzero(nnz_row).astype(np.int64)
        channels.append((rows, C.indices.astype(np.int64), C.data.astype(np.complex128)))
    return channels


def _decay_extent(A):
    """Inf-norm of the anti-Hermitian part, i.e. half the largest total decay rate."""
    anti = 0.5 * (A - A.conj().T)
    return float(sp_norm(anti, np.inf)) if anti.nnz else 0.0


def _spectral_bounds(heff):
    """(radius, shift) so that (H_eff - shift)/radius has spectrum in the unit disk strip."""
    A = heff.matrix if isinstance(heff, EmbeddedOperator) else heff
    A = A.tocsr()
    herm = 0.5 * (A + A.conj().T)
    decay_extent = _decay_extent(A)
    D = A.shape[0]
    if D <= _DENSE_EIG_LIMIT:
        evals = np.linalg.eigvalsh(herm.toarray())
        lo, hi = float(evals[0]), float(evals[-1])
    else:
        # fixed start vector: the Lanczos estimate must not depend on the
        # process that computes it, or worker counts would change the stream
        v0 = np.full(D, 1.0 / np.sqrt(D))
        try:
            hi = float(eigsh(herm, k=1, which="LA", return_eigenvectors=False,
                             tol=1e-6, maxiter=20000, v0=v0)[0])
            lo = float(eigsh(herm, k=1, which="SA", return_eigenvectors=False,
                             tol=1e-6, maxiter=20000, v0=v0)[0])
        except Exception:
            bound = sp_norm(herm, np.inf)
            lo, hi = -bound, bound
    shift = 0.5 * (lo + hi)
    radius = 1.02 * 0.5 * (hi - lo) + float(decay_extent) + 1e-9
    return radius, shift


@njit(cache=True)
def _cheb_apply(hdat, hind, hptr, psi, coefs, inv_radius, guard):
    # fused T_k recurrence: one CSR matvec per term, buffers rotated in
    # place, so the cost is pure memory traffic on three work vectors
    D = psi.shape[0]
    t_prev = psi.copy()
    t_cur = np.empty(D, np.complex128)
    for i in range(D):
        s = 0.0 + 0.0j
        for p in range(hptr[i], hptr[i + 1]):
            s += hdat[p] * psi[hind[p]]
        t_cur[i] = s * inv_radius
    acc = np.empty(D, np.complex128)
    c0 = coefs[0]
    c1 = coefs[1]
    for i in range(D):
        acc[i] = c0 * psi[i] + c1 * t_cur[i]
    t_next = np.empty(D, np.complex128)
    two_inv = 2.0 * inv_radius
    for k in range(2, coefs.shape[0]):
        ck = coefs[k]
        for i in range(D):
            s = 0.0 + 0.0j
            for p in range(hptr[i], hptr[i + 1]):
                s += hdat[p] * t_cur[hind[p]]
            v = two_inv * s - t_prev[i]
            t_next[i] = v
            acc[i] += ck * v
        tmp = t_prev
        t_prev = t_cur
        t_cur = t_next
        t_next = tmp
        if k % 32 == 0:
            m = 0.0
            for i in range(D):
                a = abs(t_cur[i])
                if a > m:
                    m = a
            if m > guard:
                return acc, False
    return acc, True


def _propagate_vec(h_shifted, radius, shift, psi, dt, tail_tol):
    coefs = _cheb.coefficients(radius * dt, tail_tol)
    guard = 100.0 * (1.0 + float(np.abs(psi).max()))
    acc, ok = _cheb_apply(h_shifted.data, h_shifted.indices, h_shifted.indptr,
                          psi, coefs, 1.0 / radius, guard)
    if not ok:
        raise _cheb.ChebDiverged
    if shift != 0.0:
        acc *= np.exp(-1j * shift * dt)
    return acc


def _propagate_retry(eng, psi, dt):
    for _ in range(4):
        try:
            return _propagate_vec(eng.h_shifted, eng.radius, eng.shift,
                                  psi, dt, eng.tail_tol)
        except _cheb.ChebDiverged:
            eng.radius *= 1.35
    raise IntegrationError(
        "Chebyshev propagation kept diverging; the spectral bound "
        "could not be stabilised")


# Polynomial expansions of exp(-i H_eff t) carry an absolute error floor of
# roughly tail_tol * exp(decay_extent * t): the Chebyshev coefficients grow
# with the imaginary spectral extent while the survival amplitude shrinks, so
# deep non-unitary spans lose all relative accuracy in the norm.  Capping the
# depth per substep keeps the survival norm accurate at any span length.
_DEPTH_CAP = 1.5


def _propagate_deep(eng, psi, dt):
    n_sub = int(np.ceil(dt / eng.step_cap)) if np.isfinite(eng.step_cap) else 1
    if n_sub <= 1:
        return _propagate_retry(eng, psi, dt)
    h = dt / n_sub
    out = psi
    for _ in range(n_sub):
        out = _propagate_retry(eng, out, h)
    return out


class _Engine:
    """Read-only operator set shared by all trajectories of one ensemble."""

    def __init__(self, config, rtol, jump_time_tol, bounds=None):
        self.config = config
        H = build_hamiltonian(config)
        collapse = build_collapse_operators(config)
        heff = effective_hamiltonian(H, collapse)
        self.radius, self.shift = bounds if bounds is not None else _spectral_bounds(heff)
        extent = _decay_extent(heff.matrix)
        self.step_cap = _DEPTH_CAP / extent if extent > 0.0 else np.inf
        eye = sp.identity(config.dim, dtype=np.complex128, format="csr")
        self.h_shifted = (heff.matrix - self.shift * eye).tocsr()
        self.h_shifted.sum_duplicates()
        self.h_shifted.sort_indices()
        self.channels = _extract_channels(collapse)
        self.tail_tol = max(1e-15, 1e-2 * rtol)
        self.jump_time_tol = jump_time_tol
        n = site_photon_numbers(config).astype(np.float64)
        q = site_qubit_excitations(config).astype(np.float64)
        self.n_w = n
        self.sz_w = q - 0.5
        self.nn1_w = n * (n - 1.0)
        cuts = config.site_cutoffs()
        self.top_w = np.zeros_like(n)
        for i in range(config.M):
            self.top_w[i] = (n[i] == cuts[i]).astype(np.float64)

    def propagate(self, psi, dt):
        return _propagate_deep(self, psi, dt)


def _pick_and_apply(psi, channels, rng):
    rates = np.empty(len(channels))
    for idx, (rows, srcs, ws) in enumerate(channels):
        amps = ws * psi[srcs]
        rates[idx] = float(np.sum(np.abs(amps) ** 2))
    total = rates.sum()
    if total <= 0.0:
        raise IntegrationError(
            "all jump weights vanish at a detected norm crossing; "
            "state and collapse operators are inconsistent")
    u = rng.random() * total
    idx = min(int(np.searchsorted(np.cumsum(rates), u, side="right")),
              len(channels) - 1)
    rows, srcs, ws = channels[idx]
    out = np.zeros_like(psi)
    out[rows] = ws * psi[srcs]
    return out / np.linalg.norm(out)


def _advance_interval(psi, dt, eng, rng, jump_log=None, t_base=0.0):
    """Waiting-time evolution of a normalized psi over dt.

    Returns (normalized state, jump count).  The rng is consumed in a
    fixed order: one uniform on entry, then per jump one uniform for the
    channel choice and one for the next waiting threshold.
    """
    if not eng.channels:
        out = eng.propagate(psi, dt)
        return out / np.linalg.norm(out), 0
    n_jumps = 0
    remaining = dt
    offset = 0.0
    r = rng.random()
    cur = psi
    while remaining > 1e-15:
        attempt = eng.propagate(cur, remaining)
        n2 = float(np.real(np.vdot(attempt, attempt)))
        if n2 >= r:
            cur = attempt
            offset += remaining
            remaining = 0.0
            break
        # survival crossed the threshold somewhere in (0, remaining):
        # bisect the first crossing, re-propagating from the bracket start
        a, b = 0.0, remaining
        psi_a = cur
        while b - a > eng.jump_time_tol:
            m = 0.5 * (a + b)
            cand = eng.propagate(psi_a, m - a)
            if float(np.real(np.vdot(cand, cand))) >= r:
                a, psi_a = m, cand
            else:
                b = m
        t_jump = 0.5 * (a + b)
        if t_jump > a:
            psi_a = eng.propagate(psi_a, t_jump - a)
        cur = _pick_and_apply(psi_a, eng.channels, rng)
        n_jumps += 1
        if jump_log is not None:
            jump_log.append(t_base + offset + t_jump)
        offset += t_jump
        remaining -= t_jump
        r = rng.random()
        if n_jumps > _MAX_JUMPS_PER_INTERVAL:
            raise IntegrationError("jump rate is pathologically high; check rates/cutoffs")
    nrm = np.linalg.norm(cur)
    if nrm == 0.0:
        raise IntegrationError("state vector collapsed to zero norm")
    return cur / nrm, n_jumps


def advance_trajectory(psi, t0, t1, h_eff, collapse, rng, *,
                       rtol=1e-6, jump_time_tol=1e-6, bounds=None, jump_log=None):
    """Advance one normalized state from t0 to t1 under the jump process.

    h_eff comes from effective_hamiltonian; collapse is the matching
    operator list.  bounds=(radius, shift) skips the spectral estimate
    when propagating many intervals with the same operators.  jump_log,
    if given, collects absolute jump times.
    """
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-8:
        raise ConfigError(f"advance_trajectory needs a normalized state, got ||psi||={nrm:.10g}")
    if t1 < t0:
        raise ConfigError("t1 must not precede t0")
    if t1 == t0:
        return psi.copy()
    A = h_eff.matrix if isinstance(h_eff, EmbeddedOperator) else h_eff
    if bounds is None:
        bounds = _spectral_bounds(A)
    eng = _AdhocEngine(A, collapse, rtol, jump_time_tol, bounds)
    out, _ = _advance_interval(psi, t1 - t0, eng, rng, jump_log=jump_log, t_base=t0)
    return out


class _AdhocEngine:
    """Engine built straight from operators, for the single-interval API."""

    def __init__(self, A, collapse, rtol, jump_time_tol, bounds):
        self.radius, self.shift = bounds
        A = A.tocsr().astype(np.complex128)
        extent = _decay_extent(A)
        self.step_cap = _DEPTH_CAP / extent if extent > 0.0 else np.inf
        eye = sp.identity(A.shape[0], dtype=np.complex128, format="csr")
        self.h_shifted = (A - self.shift * eye).tocsr()
        self.channels = _extract_channels(collapse)
        self.tail_tol = max(1e-15, 1e-2 * rtol)
        self.jump_time_tol = jump_time_tol

    def propagate(self, psi, dt):
        return _propagate_deep(self, psi, dt)


def _simulate(k, eng, psi0, times, evo, settings):
    rng = np.random.default_rng(settings.base_seed + k)
    psi = psi0.copy()
    n, M = times.size, eng.n_w.shape[0]
    N = np.empty((n, M))
    szv = np.empty((n, M))
    zv = np.empty(n)
    nn1 = np.empty((n, M))
    njumps = 0
    peak = 0.0
    for s in range(n):
        if s:
            psi, nj = _advance_interval(psi, float(times[s] - times[s - 1]), eng, rng)
            njumps += nj
        pops = np.abs(psi) ** 2
        Nrow = eng.n_w @ pops
        N[s] = Nrow
        szv[s] = eng.sz_w @ pops
        zv[s] = imbalance(Nrow)
        nn1[s] = eng.nn1_w @ pops
        top = eng.top_w @ pops
        tmax = float(top.max())
        peak = max(peak, tmax)
        if tmax > evo.truncation_tol:
            site = int(np.argmax(top))
            raise TruncationError(
                f"trajectory {k}: top Fock level of site {site} holds population "
                f"{tmax:.3e} at t={times[s]:.6g}, above truncation_tol="
                f"{evo.truncation_tol:.1e}; raise the photon cutoff")
    return N, szv, zv, nn1, njumps, peak


_WORKER = {}


def _worker_init(config, psi0, settings, evo, bounds):
    _WORKER["eng"] = _Engine(config, settings.rtol, settings.jump_time_tol, bounds=bounds)
    _WORKER["psi0"] = psi0
    _WORKER["times"] = sample_grid(evo.t_max, evo.sample_dt)
    _WORKER["evo"] = evo
    _WORKER["settings"] = settings


def _worker_run(k):
    return _simulate(k, _WORKER["eng"], _WORKER["psi0"], _WORKER["times"],
                     _WORKER["evo"], _WORKER["settings"])


def run_ensemble(initial, config, settings, evo):
    """Mean observables with standard errors over an MCWF ensemble.

    initial may be a ProductStateSpec or a state vector.  The reported z
    is the imbalance of the ensemble-mean populations (the estimator that
    converges to the master-equation value); z_err is the spread of
    per-trajectory imbalances, attached as an error scale.

    Trajectory k consumes the stream seeded with base_seed + k, and the
    reduction runs in index order, so output is reproducible bit for bit
    whatever the worker count.
    """
    if not isinstance(config, LatticeConfig):
        raise ConfigError("config must be a LatticeConfig")
    if not isinstance(settings, TrajectorySettings):
        raise ConfigError("settings must be a TrajectorySettings")
    if not isinstance(evo, EvolutionSettings):
        raise ConfigError("evo must be an EvolutionSettings")
    if isinstance(initial, ProductStateSpec):
        psi0 = product_state(initial, config)
    else:
        psi0 = np.asarray(initial, dtype=np.complex128).ravel()
        if psi0.size != config.dim:
            raise ConfigError(
                f"initial vector length {psi0.size} does not match lattice dimension {config.dim}")
        nrm = np.linalg.norm(psi0)
        if nrm == 0.0:
            raise ConfigError("initial state has zero norm")
        psi0 = psi0 / nrm
    t_start = _time.perf_counter()
    eng = _Engine(config, settings.rtol, settings.jump_time_tol)
    bounds = (eng.radius, eng.shift)
    times = sample_grid(evo.t_max, evo.sample_dt)
    n, M = times.size, config.M
    sum_N = np.zeros((n, M))
    sq_N = np.zeros((n, M))
    sum_sz = np.zeros((n, M))
    sq_sz = np.zeros((n, M))
    sum_nn1 = np.zeros((n, M))
    sq_nn1 = np.zeros((n, M))
    sum_z = np.zeros(n)
    sq_z = np.zeros(n)
    cnt_z = np.zeros(n, dtype=np.int64)
    jumps = np.zeros(settings.n_traj, dtype=np.int64)
    peak = 0.0

    if settings.workers == 1:
        results = (_simulate(k, eng, psi0, times, evo, settings)
                   for k in range(settings.n_traj))
        pool = None
    else:
        pool = mp.Pool(settings.workers, initializer=_worker_init,
                       initargs=(config, psi0, settings, evo, bounds))
        chunk = max(1, settings.n_traj // (settings.workers * 8))
        results = pool.imap(_worker_run, range(settings.n_traj), chunksize=chunk)
    try:
        for k, (N, szv, zv, nn1, nj, pk) in enumerate(results):
            sum_N += N
            sq_N += N * N
            sum_sz += szv
            sq_sz += szv * szv
            sum_nn1 += nn1
            sq_nn1 += nn1 * nn1
            ok = ~np.isnan(zv)
            zs = np.where(ok, zv, 0.0)
            sum_z += zs
            sq_z += zs * zs
            cnt_z += ok
            jumps[k] = nj
            peak = max(peak, pk)
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    nt = settings.n_traj
    mean_N = sum_N / nt
    mean_sz = sum_sz / nt
    mean_nn1 = sum_nn1 / nt

    def _stderr(sm, sq, count):
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.asarray(count, dtype=np.float64)
            mean = sm / c
            var = np.maximum(sq / c - mean**2, 0.0) * c / (c - 1.0)
            err = np.sqrt(var / c)
        return np.where(c >= 2, err, np.nan)

    N_err = _stderr(sum_N, sq_N, nt)
    sz_err = _stderr(sum_sz, sq_sz, nt)
    nn1_err = _stderr(sum_nn1, sq_nn1, nt)
    z_err = _stderr(sum_z, sq_z, cnt_z)
    z = imbalance_series(mean_N)
    g2 = g2_err = None
    if evo.compute_g2:
        with np.errstate(divide="ignore", invalid="ignore"):
            g2 = mean_nn1 / mean_N**2
            g2_err = nn1_err / mean_N**2
        low = mean_N <= POPULATION_FLOOR
        g2[low] = np.nan
        g2_err[low] = np.nan
    meta = {
        "engine": "trajectories",
        "method": "chebyshev",
        "n_traj": nt,
        "base_seed": settings.base_seed,
        "workers": settings.workers,
        "total_jumps": int(jumps.sum()),
        "jumps_per_trajectory": jumps.tolist(),
        "spectral_radius": eng.radius,
        "wall_time": _time.perf_counter() - t_start,
    }
    return TimeSeries(
        times=times, N=mean_N, sz=mean_sz, z=z, g2=g2,
        N_err=N_err, sz_err=sz_err, z_err=z_err, g2_err=g2_err,
        truncation_peak=peak, meta=meta,
    )


TrajectoryEnsembleResult = TimeSeries
