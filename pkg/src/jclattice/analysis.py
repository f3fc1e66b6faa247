"""Self-trapping diagnostics: break times, phase diagrams, analytic boundary.

The localized phase is bounded in the drive-dissipation plane by

    kappa(d_1) = 2 sqrt( 2.8^2 (d_1/g)^2 - delta_q^2 )

whose domain opens at d_1_min = g*delta_q/2.8 where the radicand
vanishes.  Numerical phase diagrams are built by sweeping the
semiclassical engine cell by cell and marking where the imbalance first
collapses for a sustained window (the raw breakdown point is masked by
rapid oscillations, hence the windowed criterion).
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .lattice import LatticeConfig
from .meanfield import MeanfieldSettings, evolve_meanfield, initial_state

CRITICAL_PREFACTOR = 2.8


def critical_coupling(N, J=1.0):
    """Self-trapping critical coupling 2.8 sqrt(N) J for initial population N."""
    if N <= 0:
        raise ConfigError("critical_coupling needs N > 0")
    return CRITICAL_PREFACTOR * np.sqrt(N) * J


@dataclass
class BreakTimeResult:
    """Break time of localization; t_break is None while trapping survives."""

    t_break: float | None
    z_long: float
    stable: bool


def detect_t_break(series, theta=0.5, window=10.0):
    """Earliest sample from which |z| stays below theta*|z(0)| for a full window.

    Samples with undefined z (population below the reporting floor) count
    as below threshold: an emptied lattice is not localized.  A candidate
    needs its whole window inside the horizon, so a decay in the last few
    samples does not register as a break.  z_long averages the final 10%
    of samples.
    """
    times = np.asarray(series.times, dtype=np.float64)
    z = np.asarray(series.z, dtype=np.float64)
    if times.size == 0:
        raise ConfigError("series is empty")
    if not 0.0 < theta < 1.0:
        raise ConfigError("theta must lie strictly between 0 and 1")
    if window <= 0:
        raise ConfigError("window must be positive")
    if times[-1] - times[0] < window:
        raise ConfigError(
            f"series spans {times[-1] - times[0]:.6g}, shorter than window={window:.6g}")
    tail = z[-max(1, z.size // 10):]
    z_long = float(np.nanmean(tail)) if np.any(np.isfinite(tail)) else float("nan")
    z0 = abs(z[0])
    if not np.isfinite(z0):
        return BreakTimeResult(t_break=None, z_long=z_long, stable=True)
    threshold = theta * z0
    below = ~(np.abs(z) >= threshold)  # NaN compares False, so NaN lands in below
    t_break = None
    tol = 1e-9 * max(1.0, window)
    for i in range(times.size):
        t_end = times[i] + window
        if t_end > times[-1] + tol:
            break  # window no longer fits inside the horizon
        j_last = int(np.searchsorted(times, t_end + tol, side="right")) - 1
        if below[i:j_last + 1].all():
            t_break = float(times[i])
            break
    return BreakTimeResult(t_break=t_break, z_long=z_long, stable=t_break is None)


def analytic_boundary_kappa(d1, g, delta_q):
    """Boundary kappa at drive d1, or None where the radicand is negative."""
    if g <= 0:
        raise ConfigError("analytic_boundary_kappa needs g > 0")
    rad = (CRITICAL_PREFACTOR * d1 / g) ** 2 - delta_q**2
    if rad < 0:
        return None
    return 2.0 * float(np.sqrt(rad))


@dataclass
class BoundaryCurve:
    """Sampled analytic boundary, restricted to its domain d1 >= d1_min."""

    d1: np.ndarray
    kappa: np.ndarray
    d1_min: float


def boundary_curve(g, delta_q, d1_values):
    """Evaluate the analytic boundary on a drive grid, dropping out-of-domain points."""
    d1_values = np.asarray(d1_values, dtype=np.float64)
    if d1_values.size == 0:
        raise ConfigError("d1_values must be nonempty")
    pairs = [(float(d1), analytic_boundary_kappa(d1, g, delta_q)) for d1 in d1_values]
    kept = [(a, b) for a, b in pairs if b is not None]
    d1_min = g * abs(delta_q) / CRITICAL_PREFACTOR
    if not kept:
        return BoundaryCurve(d1=np.empty(0), kappa=np.empty(0), d1_min=d1_min)
    arr = np.asarray(kept, dtype=np.float64)
    return BoundaryCurve(d1=arr[:, 0], kappa=arr[:, 1], d1_min=d1_min)


@dataclass
class BandEdges:
    """Per-row stable band limits; open_* marks bands cut off by the grid edge."""

    d1_min: np.ndarray
    d1_max: np.ndarray
    open_lower: np.ndarray
    open_upper: np.ndarray


@dataclass
class PhaseDiagramGrid:
    """Stability classification over (d1, kappa-or-gamma)."""

    d1_values: np.ndarray
    axis2_values: np.ndarray
    axis2_name: str
    stable: np.ndarray       # (len(axis2), len(d1)) bool
    t_break: np.ndarray      # NaN where absent or failed
    z_long: np.ndarray
    base: LatticeConfig
    horizon: float
    errors: dict = field(default_factory=dict)
    contiguity_violations: list = field(default_factory=list)

    def cell(self, i, j):
        """BreakTimeResult of d1 index i, axis2 index j (errors are keyed (j, i))."""
        if (j, i) in self.errors:
            raise KeyError(f"cell (d1[{i}], {self.axis2_name}[{j}]) failed: "
                           f"{self.errors[(j, i)]}")
        tb = self.t_break[j, i]
        return BreakTimeResult(
            t_break=None if np.isnan(tb) else float(tb),
            z_long=float(self.z_long[j, i]),
            stable=bool(self.stable[j, i]),
        )

    def band_edges(self):
        """Stable-band limits per axis2 row, interpolated midway between cells."""
        n2, n1 = self.stable.shape
        lo = np.full(n2, np.nan)
        hi = np.full(n2, np.nan)
        open_lo = np.zeros(n2, dtype=bool)
        open_hi = np.zeros(n2, dtype=bool)
        d1 = self.d1_values
        for j in range(n2):
            idx = np.flatnonzero(self.stable[j])
            if idx.size == 0:
                continue
            i0, i1 = int(idx[0]), int(idx[-1])
            if i0 > 0:
                lo[j] = 0.5 * (d1[i0 - 1] + d1[i0])
            else:
                lo[j] = d1[0]
                open_lo[j] = True
            if i1 < n1 - 1:
                hi[j] = 0.5 * (d1[i1] + d1[i1 + 1])
            else:
                hi[j] = d1[-1]
                open_hi[j] = True
        return BandEdges(d1_min=lo, d1_max=hi, open_lower=open_lo, open_upper=open_hi)


def _default_init(config):
    photons = [20.0 if i % 2 == 0 else 0.0 for i in range(config.M)]
    qubits = [-0.5] * config.M
    return initial_state(photons, qubits, config)


def phase_sweep(base, d1_values, axis2_values, axis2_name="kappa", init=None,
                horizon=1400.0, theta=0.5, window=10.0, sample_dt=1.0,
                rtol=1e-8, atol=1e-10):
    """Classify stability over a (d1, kappa-or-gamma) grid with the semiclassical engine.

    d1 replaces the drive on the first site, axis2 replaces kappa or
    gamma globally.  Cell failures are recorded in .errors and treated as
    unstable rather than aborting the sweep.
    """
    if not isinstance(base, LatticeConfig):
        raise ConfigError("base must be a LatticeConfig")
    if axis2_name not in ("kappa", "gamma"):
        raise ConfigError("axis2_name must be 'kappa' or 'gamma'")
    d1_values = np.asarray(d1_values, dtype=np.float64)
    axis2_values = np.asarray(axis2_values, dtype=np.float64)
    if d1_values.size == 0 or axis2_values.size == 0:
        raise ConfigError("sweep grids must be nonempty")
    if init is None:
        init = _default_init(base)
    settings = MeanfieldSettings(t_max=horizon, sample_dt=sample_dt, rtol=rtol, atol=atol)
    n1, n2 = d1_values.size, axis2_values.size
    stable = np.zeros((n2, n1), dtype=bool)
    t_break = np.full((n2, n1), np.nan)
    z_long = np.full((n2, n1), np.nan)
    errors = {}
    for j, v2 in enumerate(axis2_values):
        for i, d1 in enumerate(d1_values):
            d = list(base.d)
            d[0] = float(d1)
            overrides = {"d": tuple(d), axis2_name: float(v2)}
            cfg = dataclasses.replace(base, **overrides)
            try:
                series = evolve_meanfield(init, cfg, settings)
                res = detect_t_break(series, theta=theta, window=window)
            except Exception as exc:  # cell failures recorded, sweep continues
                errors[(j, i)] = str(exc)
                continue
            stable[j, i] = res.stable
            t_break[j, i] = np.nan if res.t_break is None else res.t_break
            z_long[j, i] = res.z_long
    grid = PhaseDiagramGrid(
        d1_values=d1_values, axis2_values=axis2_values, axis2_name=axis2_name,
        stable=stable, t_break=t_break, z_long=z_long,
        base=base, horizon=horizon, errors=errors,
    )
    for j in range(n2):
        idx = np.flatnonzero(stable[j])
        if idx.size and (idx[-1] - idx[0] + 1 != idx.size):
            grid.contiguity_violations.append(
                f"{axis2_name}={axis2_values[j]:.6g}: stable cells not contiguous "
                f"at d1 indices {idx.tolist()}")
    return grid


def compare_boundary(grid, curve, axis2_range=None):
    """Max relative deviation of the numerical upper band edge from the curve.

    For each kappa row inside axis2_range, the numerical d1_max is
    compared against the curve's drive at the same kappa (linear
    interpolation along the sampled curve).
    """
    if grid.axis2_name != "kappa":
        raise ConfigError("boundary comparison needs a d1-kappa grid")
    if curve.d1.size < 2:
        raise ConfigError("boundary curve has too few points to interpolate")
    edges = grid.band_edges()
    kappas = grid.axis2_values
    if axis2_range is None:
        sel = np.ones(kappas.size, dtype=bool)
    else:
        sel = (kappas >= axis2_range[0] - 1e-12) & (kappas <= axis2_range[1] + 1e-12)
    if not np.any(sel):
        raise ConfigError("no grid rows fall inside the requested kappa range")
    worst = 0.0
    for j in np.flatnonzero(sel):
        k = kappas[j]
        if k < curve.kappa[0] - 1e-12 or k > curve.kappa[-1] + 1e-12:
            raise ConfigError(
                f"grid row kappa={k:.6g} lies outside the curve's range "
                f"[{curve.kappa[0]:.6g}, {curve.kappa[-1]:.6g}]")
        num = edges.d1_max[j]
        if not np.isfinite(num) or edges.open_upper[j]:
            raise ConfigError(
                f"row kappa={k:.6g} has no resolved upper boundary inside the "
                f"d1 grid; widen the drive axis")
        ana = float(np.interp(k, curve.kappa, curve.d1))
        worst = max(worst, abs(num - ana) / ana)
    return worst
