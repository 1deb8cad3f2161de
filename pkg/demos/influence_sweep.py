"""
Boundary influence against field strength
=========================================

m = mu+(sigma_o = 1) - mu-(sigma_o = 1) measures how much the boundary still
matters at the centre of the box.  Below the critical temperature of the
pure model it stays of order one for weak disorder.  This script sweeps eps
at T = 3 for two box sizes and a few disorder replicas, the same pipeline
as ``rfimlab simulate``.
"""
from rfimlab.lab.config import ExperimentConfig
from rfimlab.lab.experiments import replica_average, run_influence_sweep

cfg = ExperimentConfig(T=(3.0,), eps=(0.0, 0.1, 0.3, 0.6), N=(4, 8), q=1,
                       sweeps=1500, burn_in=150, replicas=3, seed=1, workers=4)
records = run_influence_sweep(cfg)

print(" eps     N=4              N=8")
for eps in cfg.eps:
    row = [replica_average(records, 3.0, eps, N) for N in cfg.N]
    print(f"{eps:4.2f}  " + "  ".join(f"{m:.3f} +- {s:.3f}" for m, s, _ in row))
