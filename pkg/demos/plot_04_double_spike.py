"""
Two equal spikes
================

When two population spikes coincide, their sample counterparts do not
fluctuate independently.  Jointly, ``sqrt(p) * (lambda_hat - theta) /
theta`` behaves like the eigenvalues of a 2 x 2 random symmetric Gaussian
matrix.  The reference draws come from that matrix law.
"""

import numpy as np

from spikefisher import ExperimentConfig, Mode, Regime, build_spike_model, run_experiment
from spikefisher.limitlaw import MultiSpikeParams, multi_spike_cov

regime = Regime(p=200, n=1000, T=600, q=2)
model = build_spike_model([200.0, 200.0], multiplicities=[2])
cfg = ExperimentConfig(regime, model, replications=200, master_seed=8, mode=Mode.CLT_BLOCK)
(block,) = run_experiment(cfg, threads=4).blocks

##############################################################################
# Entry covariances of the limiting matrix for Gaussian data.  The
# diagonal entries have twice the variance of the off-diagonal one.

params = MultiSpikeParams.gaussian_identity(2, regime.y_p, regime.c_p)
print(f"var R11 = {multi_spike_cov(0, 0, 0, 0, params):.4f}")
print(f"var R12 = {multi_spike_cov(0, 1, 0, 1, params):.4f}")
print(f"cov(R11, R22) = {multi_spike_cov(0, 0, 1, 1, params):.4f}")

##############################################################################
# Compare the simulated ordered pair with the reference eigenvalues.

for j, name in enumerate(("larger", "smaller")):
    emp, ref = block.empirical[:, j], block.reference[:, j]
    print(
        f"{name:>7}: simulated mean {emp.mean():+.3f} sd {emp.std():.3f} | "
        f"reference mean {ref.mean():+.3f} sd {ref.std():.3f} | KS {block.ks[j]:.3f}"
    )
gap = block.empirical[:, 0] - block.empirical[:, 1]
print(f"median gap between the pair: {np.median(gap):.3f}")
