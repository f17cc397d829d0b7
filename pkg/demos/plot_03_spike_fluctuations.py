"""
Fluctuations of a large spike
=============================

After centering by ``theta`` and scaling by ``sqrt(p) / sigma``, the
largest sample eigenvalue should look standard normal.  The variance
``sigma^2`` depends on the fourth moment of the entries, so Gaussian and
Rademacher data need different scales.  We run a small Monte Carlo for
each and print a coarse qq table.
"""

import numpy as np

from spikefisher import ExperimentConfig, Regime, build_spike_model, run_experiment

regime = Regime(p=200, n=1000, T=600, q=1)

for dist in ("gaussian", "rademacher"):
    cfg = ExperimentConfig(regime, build_spike_model([200.0], dist=dist), replications=300, master_seed=5)
    spike = run_experiment(cfg, threads=4).spike(1)
    st = spike.stats
    print(f"\n{dist}: sigma = {spike.sigma:.4f}")
    print(f"  mean {st.mean:+.3f}  variance {st.variance:.3f}  KS {st.ks:.3f}")

    ##########################################################################
    # Selected points of the qq data: normal quantile against the sorted
    # normalized sample.  Points near the diagonal mean a good fit.
    quantiles, ordered = spike.qq()
    for k in np.linspace(0, len(ordered) - 1, 7).astype(int):
        print(f"  {quantiles[k]:+.3f} -> {ordered[k]:+.3f}")
