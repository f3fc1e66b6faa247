"""Quantum-jump ensemble versus the master equation on a small dimer.

The stochastic wavefunction average converges to the master-equation
result at the 1/sqrt(n_traj) rate; this script shows both curves with
the sampling error band.  Takes well under a minute.
"""

import numpy as np

from jclattice import (
    EvolutionSettings, LatticeConfig, ProductStateSpec, TrajectorySettings,
    evolve_master, product_state, run_ensemble,
)

cfg = LatticeConfig(M=2, n_max=4, g=[1.6, 1.6], d=[0.3, 0.0],
                    kappa=0.12, gamma=0.05)
spec = ProductStateSpec(photons=[2, 0], qubit_z=[-0.5, -0.5])
evo = EvolutionSettings(t_max=30.0, sample_dt=0.25, truncation_tol=1.0)

master = evolve_master(product_state(spec, cfg), cfg, evo)
mc = run_ensemble(spec, cfg, TrajectorySettings(n_traj=400, base_seed=11), evo)

resid = np.abs(mc.N - master.N)
print(f"max |ensemble - master| over both sites: {resid.max():.3e}")
print(f"max sampling stderr:                     {mc.N_err.max():.3e}")
print(f"largest deviation in stderr units:       "
      f"{np.max(resid / np.maximum(mc.N_err, 1e-12)):.2f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, ax = plt.subplots(figsize=(5, 3.2))
for i, c in ((0, "C0"), (1, "C1")):
    ax.plot(master.times, master.N[:, i], c, lw=1, label=f"master N{i+1}")
    ax.fill_between(mc.times, mc.N[:, i] - 3 * mc.N_err[:, i],
                    mc.N[:, i] + 3 * mc.N_err[:, i], color=c, alpha=0.25,
                    label=f"jumps N{i+1} (3 stderr)")
ax.set_xlabel("Jt")
ax.set_ylabel("N")
ax.legend(frameon=False, fontsize=8)
fig.tight_layout()
fig.savefig("trajectory_dimer.png", dpi=150)
print("wrote trajectory_dimer.png")
