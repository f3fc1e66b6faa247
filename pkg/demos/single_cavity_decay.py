"""Single lossy cavity against the analytic decay law.

A one-site lattice with the qubit decoupled is just a damped harmonic
mode: starting from one photon, N(t) = exp(-kappa t).  Both quantum
engines are checked against that curve, which makes this the quickest
end-to-end sanity run in the repository.
"""

import numpy as np

from jclattice import (
    EvolutionSettings, LatticeConfig, ProductStateSpec, TrajectorySettings,
    evolve_master, product_state, run_ensemble,
)

kappa = 0.08
cfg = LatticeConfig(M=1, n_max=2, g=0.0, d=0.0, kappa=kappa)
spec = ProductStateSpec(photons=[1], qubit_z=[-0.5])
evo = EvolutionSettings(t_max=60.0, sample_dt=0.5)

master = evolve_master(product_state(spec, cfg), cfg, evo)
mc = run_ensemble(spec, cfg, TrajectorySettings(n_traj=800, base_seed=0), evo)

exact = np.exp(-kappa * master.times)
print(f"master  max |N - exp(-kt)| = {np.abs(master.N[:, 0] - exact).max():.2e}")
dev = np.abs(mc.N[:, 0] - exact)
print(f"jumps   max |N - exp(-kt)| = {dev.max():.2e}  "
      f"(3 stderr at that point: {3 * mc.N_err[dev.argmax(), 0]:.2e})")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, ax = plt.subplots(figsize=(5, 3.2))
ax.plot(master.times, exact, "k-", lw=1, label="exp(-kappa t)")
ax.plot(master.times, master.N[:, 0], "C0--", label="master")
ax.errorbar(mc.times[::8], mc.N[::8, 0], yerr=mc.N_err[::8, 0], fmt="C1.",
            ms=4, label="trajectories")
ax.set_xlabel("Jt")
ax.set_ylabel("N")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig("single_cavity_decay.png", dpi=150)
print("wrote single_cavity_decay.png")
