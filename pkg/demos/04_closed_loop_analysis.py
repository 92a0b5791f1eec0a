"""
Closed-loop analysis
====================

Pretend to run the experiment: draw photon counts from the simulated
imperfect table, add a dark-count floor, write the CSV files an experiment
would produce, then analyze them like real data.
"""

import pathlib
import tempfile

import numpy as np

from ququart_med import canonical_ensemble, evaluate, paper_params
from ququart_med.montecarlo import UncertaintyModel, mc_guess_error
from ququart_med.pipeline import (
    CountTable, compare, counts_to_posteriors, experimental_pguess, load_counts, sample_counts,
    subtract_background, write_background, write_counts,
)

ens = canonical_ensemble()
params = paper_params()
table, post, assign, sim = evaluate(params, ens)

duration = 180.0
dark = np.full((8, 2), 0.2)  # Hz per detector bin
clean = sample_counts(table, 1_000_000, seed=7)
rng = np.random.default_rng(1)
raw = CountTable(clean.counts + rng.poisson(dark * duration, clean.counts.shape), dark, {"duration_s": duration})

with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    write_counts(raw, tmp / "counts.csv")
    write_background(raw, tmp / "background.csv")
    loaded = load_counts(tmp / "counts.csv", tmp / "background.csv", duration_s=duration)

mc = mc_guess_error(params, ens, UncertaintyModel(n_samples=300, seed=7))
exp = counts_to_posteriors(subtract_background(loaded), mc_std=mc.per_bin_std)
value, err = experimental_pguess(exp, assign)
print(f"simulated    {sim:.4f}")
print(f"recovered    {value:.4f} +- {err:.4f}")

rep = compare(table, exp)
print(f"chi2-like    {rep.chi2_like:.1f} over {exp.q.size} cells, headline pass: {rep.passed}")
