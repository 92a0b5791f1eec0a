"""Experimental count tables: loading, background subtraction, posteriors.

File formats (UTF-8, LF line endings, '.' decimal point):

* counts: header ``state,t,pi,counts``; one row per (state, bin, polarization),
  state 1-based, ``pi`` in {H, V}, non-negative integer counts;
* background: header ``t,pi,rate_hz``; one row per (bin, polarization).
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .discrimination import (
    assign_guesses,
    average_guess_probability,
    bayes_posteriors,
)
from .montecarlo import draw_generator
from .receiver import POLARIZATIONS

COUNT_HEADER = ["state", "t", "pi", "counts"]
BACKGROUND_HEADER = ["t", "pi", "rate_hz"]


class SchemaError(ValueError):
    pass


@dataclass
class CountTable:
    """Counts ``[state, t, pi]`` with background rates ``[t, pi]`` in Hz.

    ``raw`` keeps the pre-subtraction counts once :func:`subtract_background`
    has run; Poisson errors are always taken on those.
    """

    counts: np.ndarray
    background: np.ndarray = None
    meta: dict = field(default_factory=dict)
    raw: np.ndarray = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.background is None:
            self.background = np.zeros(self.counts.shape[1:])
        self.background = np.asarray(self.background, dtype=float)
        if self.background.shape != self.counts.shape[1:]:
            raise SchemaError(f"background shape {self.background.shape} != bins {self.counts.shape[1:]}")
        if np.any(self.counts < 0):
            raise SchemaError("negative counts")
        self.meta.setdefault("duration_s", 180.0)
        if "count_rate_hz" not in self.meta:
            self.meta["count_rate_hz"] = float(self.counts.sum()) / self.meta["duration_s"]

    @property
    def raw_counts(self):
        return self.counts if self.raw is None else self.raw


def _read(source):
    if hasattr(source, "read"):
        return source.read()
    with open(source, encoding="utf-8", newline="") as fh:
        return fh.read()


def _parse_pol(value, lineno):
    if value not in POLARIZATIONS:
        raise SchemaError(f"line {lineno}, column 'pi': expected H or V, got {value!r}")
    return POLARIZATIONS.index(value)


def _parse_int(value, lineno, column, lo, hi):
    try:
        v = int(value)
    except (TypeError, ValueError):
        raise SchemaError(f"line {lineno}, column {column!r}: not an integer: {value!r}") from None
    if not lo <= v <= hi:
        raise SchemaError(f"line {lineno}, column {column!r}: {v} outside [{lo}, {hi}]")
    return v


def load_counts(path, background=None, duration_s=180.0, n_states=8, n_bins=8):
    """Read a count CSV (and optionally a background CSV) into a :class:`CountTable`.

    Every (state, t, pi) cell must appear exactly once.
    """
    reader = csv.reader(io.StringIO(_read(path)))
    header = next(reader, None)
    if header != COUNT_HEADER:
        raise SchemaError(f"line 1: expected header {','.join(COUNT_HEADER)}, got {header}")
    counts = np.zeros((n_states, n_bins, 2), dtype=np.int64)
    seen = np.zeros(counts.shape, dtype=bool)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise SchemaError(f"line {lineno}: expected 4 columns, got {len(row)}")
        i = _parse_int(row[0], lineno, "state", 1, n_states) - 1
        t = _parse_int(row[1], lineno, "t", 0, n_bins - 1)
        k = _parse_pol(row[2], lineno)
        c = _parse_int(row[3], lineno, "counts", 0, np.iinfo(np.int64).max)
        if seen[i, t, k]:
            raise SchemaError(f"line {lineno}: duplicate cell (state={i + 1}, t={t}, pi={row[2]})")
        seen[i, t, k] = True
        counts[i, t, k] = c
    missing = np.argwhere(~seen)
    if missing.size:
        i, t, k = missing[0]
        raise SchemaError(
            f"missing cell (state={i + 1}, t={t}, pi={POLARIZATIONS[k]}); {len(missing)} cells missing"
        )
    bg = None if background is None else load_background(background, n_bins)
    return CountTable(counts, bg, {"duration_s": float(duration_s)})


def load_background(path, n_bins=8):
    reader = csv.reader(io.StringIO(_read(path)))
    header = next(reader, None)
    if header != BACKGROUND_HEADER:
        raise SchemaError(f"line 1: expected header {','.join(BACKGROUND_HEADER)}, got {header}")
    bg = np.zeros((n_bins, 2))
    seen = np.zeros(bg.shape, dtype=bool)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise SchemaError(f"line {lineno}: expected 3 columns, got {len(row)}")
        t = _parse_int(row[0], lineno, "t", 0, n_bins - 1)
        k = _parse_pol(row[1], lineno)
        try:
            rate = float(row[2])
        except ValueError:
            raise SchemaError(f"line {lineno}, column 'rate_hz': not a number: {row[2]!r}") from None
        if not rate >= 0:
            raise SchemaError(f"line {lineno}, column 'rate_hz': negative or NaN rate {rate}")
        seen[t, k] = True
        bg[t, k] = rate
    missing = np.argwhere(~seen)
    if missing.size:
        t, k = missing[0]
        raise SchemaError(f"missing background cell (t={t}, pi={POLARIZATIONS[k]})")
    return bg


def write_counts(table, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNT_HEADER)
    n_states, n_bins, _ = table.counts.shape
    for i in range(n_states):
        for t in range(n_bins):
            for k, pol in enumerate(POLARIZATIONS):
                w.writerow([i + 1, t, pol, int(table.counts[i, t, k])])
    return _emit(buf.getvalue(), path)


def write_background(table, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BACKGROUND_HEADER)
    for t in range(table.background.shape[0]):
        for k, pol in enumerate(POLARIZATIONS):
            w.writerow([t, pol, format(float(table.background[t, k]), ".17g")])
    return _emit(buf.getvalue(), path)


def _emit(text, path):
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def subtract_background(raw):
    """Remove ``rate_hz * duration_s`` expected dark counts per cell, clamped at 0."""
    expected = raw.background * raw.meta["duration_s"]
    cleaned = np.clip(raw.counts - expected[None], 0.0, None)
    return CountTable(
        cleaned,
        np.zeros_like(raw.background),
        dict(raw.meta),
        raw=raw.raw_counts,
    )


def combine_in_quadrature(*sigmas):
    return np.sqrt(sum(np.square(s) for s in sigmas))


def counts_to_posteriors(table, priors=None, mc_std=None):
    """Bin-wise posteriors from counts, with Poisson and optional Monte Carlo errors.

    ``q(i | t, pi) = w_i c_i / sum_j w_j c_j`` with ``w`` the priors (equal
    exposure per state is assumed). The Poisson error of every raw count
    (``sqrt(c)``) is propagated through the ratio; ``mc_std`` (indexed
    ``[state, t, pi]``) is added in quadrature. The evidence is the weighted
    count share of each bin, i.e. conditioned on detection.
    """
    c = np.asarray(table.counts, dtype=float)
    n_states = c.shape[0]
    w = np.full(n_states, 1.0 / n_states) if priors is None else np.asarray(priors, dtype=float)
    post = bayes_posteriors(c, w)
    joint = np.moveaxis(c, 0, -1) * w
    total = joint.sum(axis=-1)
    post.evidence = total / total.sum()

    var_c = np.moveaxis(np.asarray(table.raw_counts, dtype=float), 0, -1)
    s = np.where(post.empty, 1.0, total)[..., None]
    # dq_i/dc_k = (w_i delta_ik - q_i w_k) / S
    wsq_var = (w**2) * var_c
    var_q = (wsq_var * (1.0 - 2.0 * post.q) + post.q**2 * wsq_var.sum(axis=-1, keepdims=True)) / s**2
    sigma = np.sqrt(np.clip(var_q, 0.0, None))
    sigma = np.where(post.empty[..., None], 0.0, sigma)
    if mc_std is not None:
        sigma = combine_in_quadrature(sigma, np.moveaxis(np.asarray(mc_std, dtype=float), 0, -1))
    post.sigma = sigma
    return post


def experimental_pguess(post, assign, bin_normalized=False):
    """Average guess probability on measured posteriors, with its error.

    Same estimator as the simulated one; per-bin errors are treated as
    independent and propagated linearly. Returns ``(value, error)``.
    """
    weight = np.where(post.empty, 0.0, 1.0 if bin_normalized else post.evidence)
    total = weight.sum()
    value, var = 0.0, 0.0
    sigma = post.sigma if post.sigma is not None else np.zeros_like(post.q)
    for i, t, k in assign.duple_cells():
        value += post.q[t, k, i] * weight[t, k]
        var += (sigma[t, k, i] * weight[t, k]) ** 2
    return float(value / total), float(np.sqrt(var) / total)


@dataclass
class ComparisonReport:
    per_bin_delta: np.ndarray
    chi2_like: float
    experimental_pguess: float
    experimental_error: float
    simulated_pguess: float
    tolerance: float
    passed: bool

    def to_json(self):
        return {
            "per_bin_delta": self.per_bin_delta.tolist(),
            "chi2_like": self.chi2_like,
            "experimental_pguess": self.experimental_pguess,
            "experimental_error": self.experimental_error,
            "simulated_pguess": self.simulated_pguess,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def compare(sim, exp, assign=None, priors=None, n_sigma=3.0, model_tol=0.0):
    """Bin-by-bin comparison of a simulated table with measured posteriors.

    ``per_bin_delta`` is ``exp.q - sim.q`` indexed ``[t, pi, state]``.
    ``chi2_like`` sums ``(delta / sigma)^2`` over cells with a nonzero error,
    or plain squared deltas when ``exp`` carries no errors. The headline
    passes when the two guess probabilities differ by at most
    ``n_sigma * error + model_tol``.
    """
    sim_post = bayes_posteriors(sim, priors)
    if assign is None:
        assign = assign_guesses(sim_post)
    delta = exp.q - sim_post.q
    if exp.sigma is not None and np.any(exp.sigma > 0):
        mask = exp.sigma > 0
        chi2 = float(np.sum((delta[mask] / exp.sigma[mask]) ** 2))
    else:
        chi2 = float(np.sum(delta**2))
    exp_val, exp_err = experimental_pguess(exp, assign)
    sim_val = average_guess_probability(sim_post, assign)
    tol = n_sigma * exp_err + model_tol
    return ComparisonReport(delta, chi2, exp_val, exp_err, sim_val, tol, bool(abs(exp_val - sim_val) <= tol))


def sample_counts(table, n_events, seed=0, priors=None):
    """Synthetic experiment with exactly ``n_events`` detected photons.

    Events are drawn multinomially over all (state, t, pi) cells with weights
    ``prior_i p(t, pi | i)``, using the counter-based stream of draw 0 for
    ``seed``.
    """
    n_states = table.p.shape[0]
    priors = np.full(n_states, 1.0 / n_states) if priors is None else np.asarray(priors, dtype=float)
    weights = (table.p * priors[:, None, None]).ravel()
    counts = draw_generator(seed, 0).multinomial(n_events, weights / weights.sum())
    return CountTable(counts.reshape(table.p.shape))


__all__ = [
    "ComparisonReport",
    "CountTable",
    "SchemaError",
    "combine_in_quadrature",
    "compare",
    "counts_to_posteriors",
    "experimental_pguess",
    "load_background",
    "load_counts",
    "sample_counts",
    "subtract_background",
    "write_background",
    "write_counts",
]
