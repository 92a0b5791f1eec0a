"""
Error bars by Monte Carlo
=========================

Jitter every plate by 1 degree and both reflectivities by 0.02, repeat the
simulation and look at the spread of the guess probability.
"""

import time

import numpy as np

from ququart_med import canonical_ensemble, paper_params
from ququart_med.montecarlo import UncertaintyModel, mc_guess_error

ens = canonical_ensemble()
params = paper_params()

model = UncertaintyModel(sigma_angle=1.0, sigma_r=0.02, n_samples=1000, seed=7)
start = time.perf_counter()
rep = mc_guess_error(params, ens, model)
print(f"{rep.samples_used} draws in {time.perf_counter() - start:.2f}s")
print(f"P_guess = {rep.mean:.4f} +- {rep.std:.4f}")
print("quantiles 5/50/95%:", np.round(np.quantile(rep.samples, [0.05, 0.5, 0.95]), 4))

# Which of the two sources dominates?
for label, m in [
    ("angles only", UncertaintyModel(sigma_angle=1.0, sigma_r=0.0, n_samples=400, seed=7)),
    ("reflectivities only", UncertaintyModel(sigma_angle=0.0, sigma_r=0.02, n_samples=400, seed=7)),
]:
    print(f"{label:20s} std {mc_guess_error(params, ens, m).std:.4f}")

# Same seed split over workers gives the same bits.
par = mc_guess_error(params, ens, model, workers=4)
print("serial == parallel:", par.mean == rep.mean and par.std == rep.std)
