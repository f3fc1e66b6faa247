"""Coarse drive-vs-loss stability map for the driven dimer.

Each cell integrates the semiclassical equations to a fixed horizon and
asks whether the population imbalance ever collapses.  The resulting
band of stable drives is compared with the closed-form boundary.  A
coarse grid and a short horizon keep this around a minute; the fig6a
preset is the production version.
"""

import numpy as np

from jclattice import (
    LatticeConfig, boundary_curve, initial_state, phase_sweep,
)

g = 2.0 * 2.8 * np.sqrt(20.0)
base = LatticeConfig(M=2, g=g, kappa=0.04, gamma=0.04)
init = initial_state([20.0, 0.0], [-0.5, -0.5], base)

d1 = np.linspace(0.0, 0.3, 13)
kap = np.linspace(0.02, 0.2, 10)
grid = phase_sweep(base, d1, kap, axis2_name="kappa", init=init, horizon=700.0)

curve = boundary_curve(g, base.delta_q, np.linspace(0.0, 0.3, 301))
print("rows: kappa, columns: d1 (x stable, . unstable)")
for j, k in enumerate(kap):
    row = "".join("x" if s else "." for s in grid.stable[j])
    edge = grid.band_edges().d1_max[j]
    print(f"kappa={k:5.3f}  {row}  d1_max={edge if np.isfinite(edge) else float('nan'):.3f}")

print("\nanalytic d1_max at kappa=0.04:",
      f"{float(np.interp(0.04, curve.kappa, curve.d1)):.4f}" if curve.kappa.size else "n/a")
