"""Semiclassical (product-ansatz) equations of motion for the cavity chain.

Factorizing expectation values gives, per site i,

    <a_i>'  = -i delta_c <a_i> - i g_i <s-_i> + iJ(<a_{i-1}> + <a_{i+1}>)
              - (kappa/2) <a_i> - i d_i
    <s-_i>' = -i delta_q <s-_i> + 2 i g_i <a_i> <sz_i> - (gamma/2) <s-_i>
    <sz_i>' = 2 g_i Im(<s-_i>* <a_i>) - gamma (<sz_i> + 1/2)

with missing neighbours at open ends contributing zero.  The state is
packed into a real vector [Re a | Im a | Re s- | Im s- | sz] and advanced
with an embedded Dormand-Prince 4(5) pair compiled by numba, so chains of
hundreds of sites and long phase-diagram horizons stay cheap.

At gamma=0 the per-site spin length |<s->|^2 + <sz>^2 is an exact
constant of these equations, and the closed undriven system conserves
sum_i (|<a_i>|^2 + <sz_i> + 1/2); both are used as test invariants.

When the controller wants steps below the precision floor the integrator
does not abort: it clamps the step, accepts, and flags every later sample
as precision-limited (long past breakdown the oscillations carry no
physical insight anyway, but the time base must stay intact).
"""

import time as _time
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._dp45 import (
    A21, A31, A32, A41, A42, A43, A51, A52, A53, A54,
    A61, A62, A63, A64, A65,
    B1, B3, B4, B5, B6,
    E1, E3, E4, E5, E6, E7,
    MAX_FACTOR, MIN_FACTOR, SAFETY,
)
from .errors import ConfigError, IntegrationError
from .lattice import LatticeConfig
from .timeseries import TimeSeries, imbalance, sample_grid


@dataclass
class SemiclassicalState:
    """Per-site expectation values <a_i>, <s-_i>, <sz_i>."""

    alpha: np.ndarray
    sm: np.ndarray
    sz: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.complex128)
        self.sm = np.asarray(self.sm, dtype=np.complex128)
        self.sz = np.asarray(self.sz, dtype=np.float64)
        if not (self.alpha.shape == self.sm.shape == self.sz.shape):
            raise ConfigError("alpha, sm and sz must have equal length")

    @property
    def M(self):
        return self.alpha.size

    def populations(self):
        return np.abs(self.alpha) ** 2


@dataclass
class MeanfieldSettings:
    t_max: float
    sample_dt: float
    rtol: float = 1e-8
    atol: float = 1e-10
    h_floor: float = 1e-11
    max_steps_per_interval: int = 20_000_000

    def __post_init__(self):
        if self.t_max <= 0:
            raise ConfigError("t_max must be positive")
        if self.sample_dt <= 0:
            raise ConfigError("sample_dt must be positive")
        if self.sample_dt > self.t_max * (1 + 1e-12):
            raise ConfigError("sample_dt must not exceed t_max")
        for name in ("rtol", "atol", "h_floor"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_steps_per_interval < 1:
            raise ConfigError("max_steps_per_interval must be positive")


def initial_state(photons, sz, config, sm_noise=0.0):
    """alpha_i = sqrt(photons_i) real, sm_i = sm_noise (0 by default), sz as given."""
    if len(photons) != config.M or len(sz) != config.M:
        raise ConfigError("photons and sz lists must have length M")
    photons = np.asarray(photons, dtype=np.float64)
    szv = np.asarray(sz, dtype=np.float64)
    if np.any(photons < 0):
        raise ConfigError("photon numbers must be non-negative")
    if np.any(np.abs(szv) > 0.5 + 1e-12):
        raise ConfigError("sz values must lie in [-1/2, 1/2]")
    alpha = np.sqrt(photons).astype(np.complex128)
    sm = np.full(config.M, sm_noise, dtype=np.complex128)
    return SemiclassicalState(alpha=alpha, sm=sm, sz=szv, time=0.0)


@njit(cache=True)
def _mf_rhs(y, out, dc, dq, J, g, d, kap, gam, per):
    M = g.shape[0]
    for i in range(M):
        aR = y[i]
        aI = y[M + i]
        sR = y[2 * M + i]
        sI = y[3 * M + i]
        szv = y[4 * M + i]
        nR = 0.0
        nI = 0.0
        if i > 0:
            nR += y[i - 1]
            nI += y[M + i - 1]
        elif per and M > 2:
            nR += y[M - 1]
            nI += y[2 * M - 1]
        if i < M - 1:
            nR += y[i + 1]
            nI += y[M + i + 1]
        elif per and M > 2:
            nR += y[0]
            nI += y[M]
        gi = g[i]
        out[i] = dc * aI + gi * sI - J * nI - 0.5 * kap * aR
        out[M + i] = -dc * aR - gi * sR + J * nR - 0.5 * kap * aI - d[i]
        out[2 * M + i] = dq * sI - 2.0 * gi * szv * aI - 0.5 * gam * sR
        out[3 * M + i] = -dq * sR + 2.0 * gi * szv * aR - 0.5 * gam * sI
        out[4 * M + i] = 2.0 * gi * (sR * aI - sI * aR) - gam * (szv + 0.5)


@njit(cache=True)
def _mf_advance(y, t0, t1, h, rtol, atol, h_floor, max_steps,
                dc, dq, J, g, d, kap, gam, per, work):
    # advance y in place from t0 to t1; returns (status, h, steps, alarm)
    # status 0 = ok, 1 = step budget exhausted
    n = y.shape[0]
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    k5 = work[4]
    k6 = work[5]
    k7 = work[6]
    ytmp = work[7]
    ynew = work[8]
    t = t0
    alarm = False
    steps = 0
    _mf_rhs(y, k1, dc, dq, J, g, d, kap, gam, per)
    eps_edge = 1e-12 * (t1 if t1 > 1.0 else 1.0)
    while t < t1 - eps_edge:
        steps += 1
        if steps > max_steps:
            return 1, h, steps, alarm
        rem = t1 - t
        floor = h_floor * (abs(t) if abs(t) > 1.0 else 1.0)
        hcl = h if h < rem else rem
        forced = False
        if hcl < floor:
            hcl = floor if floor < rem else rem
            forced = True
        for j in range(n):
            ytmp[j] = y[j] + hcl * A21 * k1[j]
        _mf_rhs(ytmp, k2, dc, dq, J, g, d, kap, gam, per)
        for j in range(n):
            ytmp[j] = y[j] + hcl * (A31 * k1[j] + A32 * k2[j])
        _mf_rhs(ytmp, k3, dc, dq, J, g, d, kap, gam, per)
        for j in range(n):
            ytmp[j] = y[j] + hcl * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j])
        _mf_rhs(ytmp, k4, dc, dq, J, g, d, kap, gam, per)
        for j in range(n):
            ytmp[j] = y[j] + hcl * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j]
                                    + A54 * k4[j])
        _mf_rhs(ytmp, k5, dc, dq, J, g, d, kap, gam, per)
        for j in range(n):
            ytmp[j] = y[j] + hcl * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j]
                                    + A64 * k4[j] + A65 * k5[j])
        _mf_rhs(ytmp, k6, dc, dq, J, g, d, kap, gam, per)
        for j in range(n):
            ynew[j] = y[j] + hcl * (B1 * k1[j] + B3 * k3[j] + B4 * k4[j]
                                    + B5 * k5[j] + B6 * k6[j])
        _mf_rhs(ynew, k7, dc, dq, J, g, d, kap, gam, per)
        errsum = 0.0
        for j in range(n):
            e = hcl * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j]
                       + E6 * k6[j] + E7 * k7[j])
            ya = abs(y[j])
            yb = abs(ynew[j])
            sc = atol + rtol * (ya if ya > yb else yb)
            errsum += (e / sc) ** 2
        err = (errsum / n) ** 0.5
        if err <= 1.0 or forced:
            if forced and err > 1.0:
                alarm = True
            t += hcl
            for j in range(n):
                y[j] = ynew[j]
                k1[j] = k7[j]
            if err == 0.0:
                fac = MAX_FACTOR
            else:
                fac = SAFETY * err ** -0.2
                if fac > MAX_FACTOR:
                    fac = MAX_FACTOR
                elif fac < MIN_FACTOR:
                    fac = MIN_FACTOR
            h = hcl * fac
        else:
            fac = SAFETY * err ** -0.2
            if fac < MIN_FACTOR:
                fac = MIN_FACTOR
            h = hcl * fac
    return 0, h, steps, alarm


def meanfield_rhs(state, config):
    """Time derivative of a SemiclassicalState (reference entry point)."""
    if state.M != config.M:
        raise ConfigError("state length does not match config.M")
    y = _pack(state)
    out = np.empty_like(y)
    g = np.asarray(config.g, dtype=np.float64)
    d = np.asarray(config.d, dtype=np.float64)
    _mf_rhs(y, out, config.delta_c, config.delta_q, config.J, g, d,
            config.kappa, config.gamma, config.periodic)
    M = config.M
    return SemiclassicalState(
        alpha=out[0:M] + 1j * out[M:2 * M],
        sm=out[2 * M:3 * M] + 1j * out[3 * M:4 * M],
        sz=out[4 * M:5 * M],
        time=state.time,
    )


def _pack(state):
    M = state.M
    y = np.empty(5 * M, dtype=np.float64)
    y[0:M] = state.alpha.real
    y[M:2 * M] = state.alpha.imag
    y[2 * M:3 * M] = state.sm.real
    y[3 * M:4 * M] = state.sm.imag
    y[4 * M:5 * M] = state.sz
    return y


def _unpack(y, M, t):
    return SemiclassicalState(
        alpha=y[0:M] + 1j * y[M:2 * M],
        sm=y[2 * M:3 * M] + 1j * y[3 * M:4 * M],
        sz=y[4 * M:5 * M].copy(),
        time=t,
    )


def evolve_meanfield(init, config, settings):
    """Integrate the semiclassical equations and sample N_i, sz_i, z."""
    if not isinstance(config, LatticeConfig):
        raise ConfigError("config must be a LatticeConfig")
    if not isinstance(settings, MeanfieldSettings):
        raise ConfigError("settings must be a MeanfieldSettings")
    if not isinstance(init, SemiclassicalState):
        raise ConfigError("init must be a SemiclassicalState")
    if init.M != config.M:
        raise ConfigError(f"init has {init.M} sites, config.M={config.M}")
    M = config.M
    g = np.asarray(config.g, dtype=np.float64)
    d = np.asarray(config.d, dtype=np.float64)
    y = _pack(init)
    work = np.empty((9, 5 * M), dtype=np.float64)
    times = sample_grid(settings.t_max, settings.sample_dt)
    n = times.size
    N = np.empty((n, M))
    sz = np.empty((n, M))
    z = np.empty(n)
    flags = np.zeros(n, dtype=bool)
    alarmed = False
    h = min(settings.sample_dt, 1e-3)
    total_steps = 0
    t_wall = _time.perf_counter()

    def _record(idx):
        pops = y[0:M] ** 2 + y[M:2 * M] ** 2
        N[idx] = pops
        sz[idx] = y[4 * M:5 * M]
        z[idx] = imbalance(pops)
        flags[idx] = alarmed

    _record(0)
    for s in range(1, n):
        status, h, steps, alarm = _mf_advance(
            y, float(times[s - 1]), float(times[s]), h,
            settings.rtol, settings.atol, settings.h_floor,
            settings.max_steps_per_interval,
            config.delta_c, config.delta_q, config.J, g, d,
            config.kappa, config.gamma, config.periodic, work)
        total_steps += steps
        if status != 0:
            raise IntegrationError(
                f"semiclassical integration exceeded the step budget in the "
                f"interval ending t={times[s]:.6g}")
        if alarm:
            alarmed = True
        _record(s)
    meta = {
        "engine": "meanfield",
        "method": "dp45",
        "n_steps": total_steps,
        "precision_alarm": alarmed,
        "wall_time": _time.perf_counter() - t_wall,
    }
    return TimeSeries(
        times=times, N=N, sz=sz, z=z,
        precision_limited=flags,
        final_state=_unpack(y, M, float(times[-1])),
        meta=meta,
    )
