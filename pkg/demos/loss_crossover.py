"""
Memory-to-paramagnet crossover in the boson loss
================================================

Disorder-averaged retrieval order parameter against eta.  Small ensembles
keep this demo around a minute; the release-gate run in
tests/test_acceptance.py uses 100 trajectories x 10 realizations.
"""

import numpy as np

from spinmem import ensemble, model

# horizons per eta: ordered systems (small eta) need long horizons but flip
# rarely once locked; disordered ones equilibrate fast and flip constantly
HORIZONS = {1.0: 2e5, 2.0: 2e4, 4.0: 1e3, 8.0: 1e3}

rows = []
for eta, t_end in sorted(HORIZONS.items()):
    spec = ensemble.EnsembleSpec(
        params=model.ModelParams(num_spins=50, num_patterns=2, eta=eta,
                                 theta=0.9, coupling_width=0.25),
        n_traj=20,
        n_distr=3,
        eta_grid=(eta,),
        initial=ensemble.InitialCondition(kind="random"),
        master_seed=0,
        t_end=t_end,
        n_samples=200,
    )
    result = ensemble.disorder_sweep(spec)
    rows.append((eta, result.mean_m[0], result.std_m[0]))
    print("eta = %4.1f   <M> = %.3f +- %.3f   (failures: %d)"
          % (eta, result.mean_m[0], result.std_m[0], len(result.failures)))

floor = ensemble.random_overlap_floor(50, 2)
print("random-overlap floor: %.3f" % floor)

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

etas, means, stds = np.array(rows).T
fig, ax = plt.subplots(figsize=(4.6, 3.4))
ax.errorbar(etas, means, yerr=stds, marker="o")
ax.axhline(floor, linestyle="--", color="gray", label="random floor")
ax.set_xlabel("eta")
ax.set_ylabel("<M>")
ax.set_xscale("log", base=2)
ax.legend()
fig.tight_layout()
fig.savefig("loss_crossover.png", dpi=120)
print("wrote loss_crossover.png")
