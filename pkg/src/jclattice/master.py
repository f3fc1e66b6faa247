"""Exact Lindblad propagation of the lattice density matrix.

The generator is

    drho/dt = -i[H, rho] + sum_k ( C_k rho C_k^+ - 1/2 {C_k^+ C_k, rho} )

which we evaluate in the numerically convenient split form

    L(rho) = K rho + rho K^+ + sum_k C_k rho C_k^+ ,   K = -iH - 1/2 sum_k C_k^+ C_k.

Every collapse operator produced by the builder (photon loss, qubit decay)
has at most one nonzero per row, so C rho C^+ reduces to a weighted gather
    (C rho C^+)[i, j] = w_i conj(w_j) rho[src_i, src_j]
and K inherits the sparsity of H plus a diagonal.  Both structures are
exploited in a compiled kernel; everything else is plain numpy.

Two steppers are provided.  "rk45" is an adaptive embedded Runge-Kutta
pair, robust and tolerance-driven.  "chebyshev" expands exp(L*dt) for a
whole sample interval in Chebyshev polynomials of the (shifted) generator,
which needs far fewer applications of L per unit time once the spectral
width is large; the two routes are interchangeable within tolerance and
are cross-checked in the test suite.
"""

import time as _time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.linalg import eigsh

from . import _cheb, _dp45
from .errors import ConfigError, IntegrationError, TruncationError
from .lattice import LatticeConfig
from .operators import (
    EmbeddedOperator,
    build_collapse_operators,
    build_hamiltonian,
    site_photon_numbers,
    site_qubit_excitations,
)
from .timeseries import POPULATION_FLOOR, TimeSeries, imbalance, sample_grid

_DENSE_EIG_LIMIT = 2048
_CHEB_RETRIES = 4


@dataclass
class DensityMatrix:
    """Dense density matrix snapshot with the time it belongs to."""

    matrix: np.ndarray
    time: float = 0.0

    @classmethod
    def from_state_vector(cls, psi, time=0.0):
        psi = np.asarray(psi, dtype=np.complex128).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0.0:
            raise ConfigError("cannot build a density matrix from the zero vector")
        psi = psi / norm
        return cls(matrix=np.outer(psi, psi.conj()), time=time)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def trace(self):
        return complex(np.trace(self.matrix))


@dataclass
class EvolutionSettings:
    """Knobs for evolve_master.

    truncation_tol bounds the population allowed in the top Fock level of
    any site; crossing it aborts the run rather than silently returning
    cutoff-polluted data.  positivity_tol bounds how negative a diagonal
    entry of rho may drift before the run is declared broken.
    """

    t_max: float
    sample_dt: float
    rtol: float = 1e-6
    atol: float = 1e-9
    truncation_tol: float = 1e-6
    positivity_tol: float = 1e-6
    compute_g2: bool = False
    method: str = "rk45"
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.t_max <= 0:
            raise ConfigError("t_max must be positive")
        if self.sample_dt <= 0:
            raise ConfigError("sample_dt must be positive")
        if self.sample_dt > self.t_max * (1 + 1e-12):
            raise ConfigError("sample_dt must not exceed t_max")
        for name in ("rtol", "atol", "truncation_tol", "positivity_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.method not in ("rk45", "chebyshev"):
            raise ConfigError(f"unknown method {self.method!r}, expected 'rk45' or 'chebyshev'")


def lindblad_rhs(rho, hamiltonian, collapse_ops):
    """Reference evaluation of the Lindblad generator.

    Straightforward matrix products, no structure assumptions; the fast
    kernel is validated against this.
    """
    H = getattr(hamiltonian, "matrix", hamiltonian)
    rho = np.asarray(rho, dtype=np.complex128)
    out = -1j * (H @ rho - rho @ H)
    for op in collapse_ops:
        C = getattr(op, "matrix", op)
        Crho = C @ rho
        out += Crho @ C.conj().T
        CtC = C.conj().T @ C
        out -= 0.5 * (CtC @ rho + rho @ CtC)
    return np.asarray(out)


@njit(cache=True)
def _apply_liouvillian(kdat, kind, kptr, hdat, hind, hptr,
                       ch_rows, ch_srcs, ch_ws, ch_ptr, rho, out):
    # out = K rho + rho K^+ + sum_k C_k rho C_k^+, valid for any rho (the
    # Chebyshev recurrence feeds non-Hermitian intermediates through here).
    D = rho.shape[0]
    for i in range(D):
        for j in range(D):
            out[i, j] = 0.0
        for p in range(kptr[i], kptr[i + 1]):
            v = kdat[p]
            k = kind[p]
            for j in range(D):
                out[i, j] += v * rho[k, j]
    # rho @ K^+ with K^+ in CSR: column update out[:, j] += rho[:, k] * Kdag[k, j],
    # blocked over rows so the touched stripes of rho and out stay cached
    B = 128
    ib = 0
    while ib < D:
        ihi = min(ib + B, D)
        for k in range(D):
            for p in range(hptr[k], hptr[k + 1]):
                w = hdat[p]
                j = hind[p]
                for i in range(ib, ihi):
                    out[i, j] += rho[i, k] * w
        ib = ihi
    nch = ch_ptr.shape[0] - 1
    for c in range(nch):
        lo = ch_ptr[c]
        hi = ch_ptr[c + 1]
        for ii in range(lo, hi):
            i = ch_rows[ii]
            si = ch_srcs[ii]
            wi = ch_ws[ii]
            for jj in range(lo, hi):
                out[i, ch_rows[jj]] += wi * np.conj(ch_ws[jj]) * rho[si, ch_srcs[jj]]


@njit(cache=True)
def _cheb_update(lout, prev, acc, scale, coef):
    # lout holds L(t_cur) on entry; replace it with the next Chebyshev
    # iterate t_next = scale*lout - prev and fold coef*t_next into acc.
    D = lout.shape[0]
    for i in range(D):
        for j in range(D):
            t = scale * lout[i, j] - prev[i, j]
            lout[i, j] = t
            acc[i, j] += coef * t


class _Liouvillian:
    """Preassembled generator data plus diagonal observable weights."""

    def __init__(self, config):
        self.config = config
        H = build_hamiltonian(config).matrix.tocsr()
        H.sum_duplicates()
        H.sort_indices()
        self.H = H
        collapse = build_collapse_operators(config)
        K = (-1j) * H
        decay_diag = np.zeros(config.dim)
        rows_all, srcs_all, ws_all, ptr = [], [], [], [0]
        for op in collapse:
            C = op.matrix.tocsr()
            C.sum_duplicates()
            C.sort_indices()
            CtC = (C.conj().T @ C).tocsr()
            K = K - 0.5 * CtC
            decay_diag += CtC.diagonal().real
            nnz_row = np.diff(C.indptr)
            if nnz_row.max(initial=0) > 1:
                raise AssertionError("collapse operator is not single-entry-per-row")
            rows_all.append(np.flatnonzero(nnz_row).astype(np.int64))
            srcs_all.append(C.indices.astype(np.int64))
            ws_all.append(C.data.astype(np.complex128))
            ptr.append(ptr[-1] + rows_all[-1].size)
        self.K = K.tocsr()
        self.K.sum_duplicates()
        self.K.sort_indices()
        self.Kdag = self.K.conj().T.tocsr()
        self.Kdag.sum_duplicates()
        self.Kdag.sort_indices()
        if rows_all:
            self.ch_rows = np.concatenate(rows_all)
            self.ch_srcs = np.concatenate(srcs_all)
            self.ch_ws = np.concatenate(ws_all)
        else:
            self.ch_rows = np.zeros(0, dtype=np.int64)
            self.ch_srcs = np.zeros(0, dtype=np.int64)
            self.ch_ws = np.zeros(0, dtype=np.complex128)
        self.ch_ptr = np.asarray(ptr, dtype=np.int64)
        self.max_decay = float(decay_diag.max(initial=0.0))
        n = site_photon_numbers(config).astype(np.float64)
        q = site_qubit_excitations(config).astype(np.float64)
        self.n_w = n
        self.sz_w = q - 0.5
        self.nn1_w = n * (n - 1.0)
        cuts = config.site_cutoffs()
        self.top_w = np.zeros_like(n)
        for i in range(config.M):
            self.top_w[i] = (n[i] == cuts[i]).astype(np.float64)
        self.n_rhs_evals = 0
        self._radius = None

    def apply(self, rho, out):
        _apply_liouvillian(
            self.K.data, self.K.indices, self.K.indptr,
            self.Kdag.data, self.Kdag.indices, self.Kdag.indptr,
            self.ch_rows, self.ch_srcs, self.ch_ws, self.ch_ptr,
            rho, out,
        )
        self.n_rhs_evals += 1

    def spectral_radius(self):
        # Eigenvalues of L sit in a strip: imaginary parts are bounded by
        # the spread of the Hamiltonian spectrum, real parts by the largest
        # total decay rate.  A 2% pad keeps the scaled spectrum inside [-1, 1].
        if self._radius is None:
            D = self.H.shape[0]
            if D <= _DENSE_EIG_LIMIT:
                evals = np.linalg.eigvalsh(self.H.toarray())
                lo, hi = evals[0], evals[-1]
            else:
                # fixed start vector keeps the Lanczos result (and hence the
                # Chebyshev term count) identical across processes and reruns
                v0 = np.full(D, 1.0 / np.sqrt(D))
                try:
                    hi = eigsh(self.H, k=1, which="LA", return_eigenvectors=False,
                               tol=1e-6, maxiter=20000, v0=v0)[0]
                    lo = eigsh(self.H, k=1, which="SA", return_eigenvectors=False,
                               tol=1e-6, maxiter=20000, v0=v0)[0]
                except Exception:
                    lo = -sp.linalg.norm(self.H, np.inf)
                    hi = -lo
            width = float(hi - lo)
            self._radius = 1.02 * width + self.max_decay + 1e-9
        return self._radius


class _Recorder:
    def __init__(self, gen, settings, times):
        self.gen = gen
        self.settings = settings
        n, M = times.size, gen.config.M
        self.N = np.empty((n, M))
        self.sz = np.empty((n, M))
        self.z = np.empty(n)
        self.g2 = np.empty((n, M)) if settings.compute_g2 else None
        self.trace0 = None
        self.trace_drift = 0.0
        self.herm_drift = 0.0
        self.truncation_peak = 0.0

    def record(self, idx, t, rho):
        diag = np.diag(rho).real
        tr = diag.sum()
        if self.trace0 is None:
            self.trace0 = tr
        self.trace_drift = max(self.trace_drift, abs(tr - self.trace0))
        h = float(np.abs(rho - rho.conj().T).max())
        self.herm_drift = max(self.herm_drift, h)
        dmin = diag.min()
        if dmin < -self.settings.positivity_tol:
            raise IntegrationError(
                f"density matrix lost positivity at t={t:.6g} "
                f"(min diagonal {dmin:.3e}); tighten rtol/atol")
        top = self.gen.top_w @ diag
        peak = float(top.max())
        self.truncation_peak = max(self.truncation_peak, peak)
        if peak > self.settings.truncation_tol:
            site = int(np.argmax(top))
            raise TruncationError(
                f"top Fock level of site {site} holds population {peak:.3e} "
                f"at t={t:.6g}, above truncation_tol={self.settings.truncation_tol:.1e}; "
                f"raise the photon cutoff")
        Nrow = self.gen.n_w @ diag
        self.N[idx] = Nrow
        self.sz[idx] = self.gen.sz_w @ diag
        self.z[idx] = imbalance(Nrow)
        if self.g2 is not None:
            num = self.gen.nn1_w @ diag
            with np.errstate(divide="ignore", invalid="ignore"):
                val = num / Nrow**2
            val[Nrow <= POPULATION_FLOOR] = np.nan
            self.g2[idx] = val


def _as_density_matrix(state, config):
    if isinstance(state, DensityMatrix):
        rho = state.matrix
    else:
        arr = np.asarray(state)
        if arr.ndim == 1:
            return _as_density_matrix(DensityMatrix.from_state_vector(arr), config)
        rho = arr
    rho = np.array(rho, dtype=np.complex128, copy=True)
    if rho.shape != (config.dim, config.dim):
        raise ConfigError(
            f"density matrix shape {rho.shape} does not match lattice dimension {config.dim}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise ConfigError(f"initial density matrix has trace {tr:.8g}, expected 1")
    rho /= tr
    rho = 0.5 * (rho + rho.conj().T)
    return rho


def _integrate_rk45(gen, rho, times, recorder, settings):
    d = _dp45
    D = rho.shape[0]
    k = [np.empty((D, D), dtype=np.complex128) for _ in range(7)]
    ytmp = np.empty_like(rho)
    ynew = np.empty_like(rho)
    gen.apply(rho, k[0])
    h = None
    n_steps = 0
    n_rejected = 0
    recorder.record(0, times[0], rho)
    for s in range(1, times.size):
        target = times[s]
        t = times[s - 1]
        if h is None:
            # crude first step from the size of the initial derivative
            f0 = float(np.abs(k[0]).max())
            h = min(target - t, 0.01 / (f0 + 1e-12), 1.0)
        while t < target - 1e-12 * max(1.0, target):
            h_att = min(h, target - t)
            if h_att < 1e-14 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t:.6g}")
            if n_steps + n_rejected > settings.max_steps:
                raise IntegrationError("exceeded max_steps in rk45 master propagation")
            np.multiply(k[0], d.A21 * h_att, out=ytmp)
            ytmp += rho
            gen.apply(ytmp, k[1])
            np.multiply(k[0], d.A31 * h_att, out=ytmp)
            ytmp += d.A32 * h_att * k[1]
            ytmp += rho
            gen.apply(ytmp, k[2])
            np.multiply(k[0], d.A41 * h_att, out=ytmp)
            ytmp += d.A42 * h_att * k[1]
            ytmp += d.A43 * h_att * k[2]
            ytmp += rho
            gen.apply(ytmp, k[3])
            np.multiply(k[0], d.A51 * h_att, out=ytmp)
            ytmp += d.A52 * h_att * k[1]
            ytmp += d.A53 * h_att * k[2]
            ytmp += d.A54 * h_att * k[3]
            ytmp += rho
            gen.apply(ytmp, k[4])
            np.multiply(k[0], d.A61 * h_att, out=ytmp)
            ytmp += d.A62 * h_att * k[1]
            ytmp += d.A63 * h_att * k[2]
            ytmp += d.A64 * h_att * k[3]
            ytmp += d.A65 * h_att * k[4]
            ytmp += rho
            gen.apply(ytmp, k[5])
            np.multiply(k[0], d.B1 * h_att, out=ynew)
            ynew += d.B3 * h_att * k[2]
            ynew += d.B4 * h_att * k[3]
            ynew += d.B5 * h_att * k[4]
            ynew += d.B6 * h_att * k[5]
            ynew += rho
            gen.apply(ynew, k[6])
            err = d.E1 * k[0] + d.E3 * k[2] + d.E4 * k[3] + d.E5 * k[4] \
                + d.E6 * k[5] + d.E7 * k[6]
            scale = settings.atol + settings.rtol * np.maximum(np.abs(rho), np.abs(ynew))
            enorm = float(np.sqrt(np.mean(np.abs(h_att * err / scale) ** 2)))
            if enorm <= 1.0:
                t += h_att
                rho, ynew = ynew, rho
                k[0], k[6] = k[6], k[0]
                n_steps += 1
                grow = d.MAX_FACTOR if enorm == 0.0 else min(
                    d.MAX_FACTOR, d.SAFETY * enorm ** -0.2)
                h = h_att * max(d.MIN_FACTOR, grow)
            else:
                n_rejected += 1
                h = h_att * max(d.MIN_FACTOR, d.SAFETY * enorm ** -0.2)
        recorder.record(s, target, rho)
    return rho, {"n_steps": n_steps, "n_rejected": n_rejected}


def _cheb_segment(gen, rho, dt, radius, tail_tol, bufs):
    # propagate rho by dt: rho(t+dt) = sum_k c_k T_k(iL/R) rho
    prev, cur, scratch, acc = bufs
    coefs = _cheb.coefficients(radius * dt, tail_tol)
    guard = 100.0 * (1.0 + float(np.abs(rho).max()))
    np.multiply(rho, coefs[0], out=acc)
    np.copyto(prev, rho)
    gen.apply(prev, cur)
    cur *= 1j / radius
    acc += coefs[1] * cur
    scale = 2j / radius
    for k in range(2, coefs.size):
        gen.apply(cur, scratch)
        _cheb_update(scratch, prev, acc, scale, coefs[k])
        prev, cur, scratch = cur, scratch, prev
        if k % 16 == 0 and float(np.abs(cur).max()) > guard:
            raise _cheb.ChebDiverged
    np.copyto(rho, acc)
    return coefs.size


def _integrate_chebyshev(gen, rho, times, recorder, settings):
    radius = gen.spectral_radius()
    tail_tol = max(1e-15, 1e-2 * settings.rtol)
    D = rho.shape[0]
    bufs = tuple(np.empty((D, D), dtype=np.complex128) for _ in range(4))
    saved = np.empty_like(rho)
    recorder.record(0, times[0], rho)
    n_terms = 0
    n_segments = 0
    for s in range(1, times.size):
        dt = times[s] - times[s - 1]
        np.copyto(saved, rho)
        for attempt in range(_CHEB_RETRIES):
            try:
                n_terms += _cheb_segment(gen, rho, dt, radius, tail_tol, bufs)
                break
            except _cheb.ChebDiverged:
                radius *= 1.35
                np.copyto(rho, saved)
        else:
            raise IntegrationError(
                "Chebyshev propagation kept diverging; the spectral bound "
                "could not be stabilised")
        n_segments += 1
        recorder.record(s, times[s], rho)
    return rho, {"n_segments": n_segments, "n_terms": n_terms,
                 "spectral_radius": radius}


def evolve_master(rho0, config, settings):
    """Propagate a density matrix and sample site observables.

    rho0 may be a DensityMatrix, a dense matrix, or a state vector (which
    is promoted to a pure-state projector).  Returns a TimeSeries whose
    final_state carries the end-of-run DensityMatrix.
    """
    if not isinstance(config, LatticeConfig):
        raise ConfigError("config must be a LatticeConfig")
    if not isinstance(settings, EvolutionSettings):
        raise ConfigError("settings must be an EvolutionSettings")
    rho = _as_density_matrix(rho0, config)
    gen = _Liouvillian(config)
    times = sample_grid(settings.t_max, settings.sample_dt)
    recorder = _Recorder(gen, settings, times)
    t0 = _time.perf_counter()
    if settings.method == "chebyshev":
        rho, info = _integrate_chebyshev(gen, rho, times, recorder, settings)
    else:
        rho, info = _integrate_rk45(gen, rho, times, recorder, settings)
    wall = _time.perf_counter() - t0
    meta = {
        "engine": "master",
        "method": settings.method,
        "n_rhs_evals": gen.n_rhs_evals,
        "trace_drift": recorder.trace_drift,
        "hermiticity_drift": recorder.herm_drift,
        "wall_time": wall,
    }
    meta.update(info)
    return TimeSeries(
        times=times,
        N=recorder.N,
        sz=recorder.sz,
        z=recorder.z,
        g2=recorder.g2,
        final_state=DensityMatrix(matrix=rho, time=float(times[-1])),
        truncation_peak=recorder.truncation_peak,
        meta=meta,
    )


def expectation(op, state):
    """Tr(A rho) for density matrices, <psi|A|psi> for vectors."""
    A = op.matrix if isinstance(op, EmbeddedOperator) else op
    rho = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state)
    if rho.ndim == 1:
        return complex(np.vdot(rho, A @ rho))
    if sp.issparse(A):
        return complex(A.multiply(rho.T).sum())
    return complex(np.trace(A @ rho))


def g2_zero(state, site, config):
    """Equal-time photon correlation <n(n-1)>/<n>^2 at one site (0-based).

    Diagonal in the Fock basis, so only populations enter.  Returns NaN
    when the site population is below the reporting floor.
    """
    if not 0 <= site < config.M:
        raise ConfigError(f"site {site} out of range for M={config.M}")
    rho = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state)
    if rho.ndim == 1:
        pops = np.abs(rho) ** 2
    else:
        pops = np.diag(rho).real
    n = site_photon_numbers(config)[site].astype(np.float64)
    den = float(n @ pops)
    if den <= POPULATION_FLOOR:
        return float("nan")
    num = float((n * (n - 1.0)) @ pops)
    return num / den**2
