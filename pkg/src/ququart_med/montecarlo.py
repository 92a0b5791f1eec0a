"""Monte Carlo propagation of hardware uncertainties.

Random numbers come from numpy's Philox4x64-10 counter-based generator. Draw
``j`` of a run with seed ``s`` uses its own stream, keyed by ``(s, j)`` with
the counter starting at zero, so any partition of the draws over workers
reproduces the serial run bit for bit.
"""

import csv
import dataclasses
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .components import BSParams, WaveplateSet
from .discrimination import assign_guesses, average_guess_probability, bayes_posteriors
from .receiver import POLARIZATIONS, simulate_distribution


def draw_generator(seed, index):
    """Philox stream for draw ``index`` of the run seeded with ``seed``."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class UncertaintyModel:
    """Angle spread in degrees, reflectivity spread as a probability.

    ``distribution`` is ``"gaussian"`` or ``"uniform"``; the uniform option has
    the same standard deviation (half-width ``sigma * sqrt(3)``).
    """

    sigma_angle: float = 1.0
    sigma_r: float = 0.02
    n_samples: int = 1000
    seed: int = 0
    distribution: str = "gaussian"

    def __post_init__(self):
        if self.sigma_angle < 0 or self.sigma_r < 0:
            raise ValueError("uncertainties must be non-negative")
        if self.n_samples < 2:
            raise ValueError("at least two samples are needed")
        if self.distribution not in ("gaussian", "uniform"):
            raise ValueError(f"unknown distribution {self.distribution!r}")


def _noise(rng, sigma, size, distribution):
    if distribution == "uniform":
        half = sigma * np.sqrt(3.0)
        return rng.uniform(-half, half, size)
    return rng.normal(0.0, sigma, size)


def perturb(params, model, rng):
    """Jitter the six waveplate angles and the two reflectivities.

    Reflectivities are clamped to [0, 1 - loss_bs] so the splitter stays
    physical; every other field is copied.
    """
    da = np.radians(_noise(rng, model.sigma_angle, 6, model.distribution))
    dr = _noise(rng, model.sigma_r, 2, model.distribution)
    prep = WaveplateSet(*(params.prep_set.as_array() + da[:3]))
    loop = WaveplateSet(*(params.loop_set.as_array() + da[3:]))
    top = 1.0 - params.bs.loss_bs
    bs = BSParams(
        r_h=float(np.clip(params.bs.r_h + dr[0], 0.0, top)),
        r_v=float(np.clip(params.bs.r_v + dr[1], 0.0, top)),
        loss_bs=params.bs.loss_bs,
        loss_loop=params.bs.loss_loop,
    )
    return dataclasses.replace(params, prep_set=prep, loop_set=loop, bs=bs)


@dataclass
class MCReport:
    mean: float
    std: float
    per_bin_std: np.ndarray
    samples_used: int
    failed: int = 0
    samples: np.ndarray = None

    def to_json(self):
        return {
            "mean": self.mean,
            "std": self.std,
            "per_bin_std": self.per_bin_std.tolist(),
            "samples_used": self.samples_used,
            "failed": self.failed,
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["mean"], d["std"], np.array(d["per_bin_std"]), d["samples_used"], d.get("failed", 0))

    def per_bin_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state", "t", "pi", "std"])
        n_states, n_bins, _ = self.per_bin_std.shape
        for i in range(n_states):
            for t in range(n_bins):
                for k, pol in enumerate(POLARIZATIONS):
                    w.writerow([i + 1, t, pol, format(float(self.per_bin_std[i, t, k]), ".17g")])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _run_draws(params, ens, model, assign, indices):
    out = []
    for j in indices:
        p = perturb(params, model, draw_generator(model.seed, j))
        try:
            post = bayes_posteriors(simulate_distribution(ens, p), ens.priors)
            val = average_guess_probability(post, assign)
        except (ValueError, FloatingPointError):
            out.append((j, None, None))
            continue
        if not np.isfinite(val) or not np.all(np.isfinite(post.q)):
            out.append((j, None, None))
            continue
        out.append((j, val, post.q))
    return out


def _spread(a):
    # Shift by the first draw so identical samples give exactly zero.
    return (a - a[0]).std(axis=0, ddof=1)


def mc_guess_error(params, ens, model, assign=None, workers=1):
    """Spread of the average guess probability under ``model``.

    Guesses follow ``assign``, by default the assignment of the unperturbed
    receiver, as in an experiment where the duples are fixed in advance.
    ``per_bin_std`` is the spread of the posteriors, indexed ``[state, t, pi]``.
    Draws that fail to simulate are dropped and counted in ``failed``.
    """
    if assign is None:
        assign = assign_guesses(bayes_posteriors(simulate_distribution(ens, params), ens.priors))
    indices = range(model.n_samples)
    if workers > 1:
        chunks = [list(indices[k::workers]) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_draws, *zip(*[(params, ens, model, assign, c) for c in chunks]))
            results = [r for part in parts for r in part]
    else:
        results = _run_draws(params, ens, model, assign, indices)
    results.sort(key=lambda r: r[0])
    good = [r for r in results if r[1] is not None]
    if len(good) < 2:
        raise RuntimeError(f"only {len(good)} Monte Carlo draws succeeded")
    vals = np.array([r[1] for r in good])
    qs = np.stack([r[2] for r in good])
    return MCReport(
        mean=float(vals.mean()),
        std=float(_spread(vals)),
        per_bin_std=np.moveaxis(_spread(qs), -1, 0),
        samples_used=len(good),
        failed=len(results) - len(good),
        samples=vals,
    )


__all__ = ["MCReport", "UncertaintyModel", "draw_generator", "mc_guess_error", "perturb"]
