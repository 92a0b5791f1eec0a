"""Figures of merit for the receiver: posteriors, guesses, success probability.

Posterior arrays are indexed ``q[t, pi, state]``; the evidence
``P(t, pi) = sum_j prior_j P(t, pi | j)`` is carried alongside.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .receiver import POLARIZATIONS


class DegenerateAssignmentError(ValueError):
    """Some state is never the most likely explanation of any outcome."""


@dataclass
class PosteriorTable:
    q: np.ndarray
    evidence: np.ndarray
    empty: np.ndarray = None
    sigma: np.ndarray = None

    def __post_init__(self):
        if self.empty is None:
            self.empty = self.evidence <= 0

    @property
    def n_bins(self):
        return self.q.shape[0]

    @property
    def n_states(self):
        return self.q.shape[2]

    def to_json(self):
        d = {
            "q": self.q.tolist(),
            "evidence": self.evidence.tolist(),
            "empty": self.empty.tolist(),
        }
        if self.sigma is not None:
            d["sigma"] = self.sigma.tolist()
        return d

    @classmethod
    def from_json(cls, d):
        sigma = d.get("sigma")
        return cls(
            np.array(d["q"], dtype=float),
            np.array(d["evidence"], dtype=float),
            np.array(d["empty"], dtype=bool),
            None if sigma is None else np.array(sigma, dtype=float),
        )


def bayes_posteriors(table, priors=None):
    """``q(i | t, pi) = p(t, pi | i) prior_i / P(t, pi)``.

    Bins with zero evidence are flagged in ``empty`` and their posteriors left
    at zero.
    """
    p = table.p if hasattr(table, "p") else np.asarray(table)
    if priors is None:
        priors = np.full(p.shape[0], 1.0 / p.shape[0])
    priors = np.asarray(priors, dtype=float)
    if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
        raise ValueError("priors must be non-negative and sum to 1")
    joint = np.moveaxis(p, 0, -1) * priors
    evidence = joint.sum(axis=-1)
    empty = evidence <= 0
    q = np.divide(joint, evidence[..., None], out=np.zeros_like(joint), where=~empty[..., None])
    return PosteriorTable(q, evidence, empty)


@dataclass
class GuessAssignment:
    """Guessed state per outcome plus each state's two duples.

    ``guess[t, pi]`` is a 0-based state index, -1 on empty bins.
    ``duples[i]`` maps ``"H"``/``"V"`` to the bin owned by state ``i`` in that
    polarization, or ``None``.
    """

    guess: np.ndarray
    duples: list = field(default_factory=list)

    def duple_cells(self):
        for i, d in enumerate(self.duples):
            for k, pol in enumerate(POLARIZATIONS):
                if d[pol] is not None:
                    yield i, d[pol], k

    def to_json(self):
        return {
            "guess": self.guess.tolist(),
            "duples": [
                {"state": i + 1, "H": d["H"], "V": d["V"]} for i, d in enumerate(self.duples)
            ],
        }

    @classmethod
    def from_json(cls, d):
        duples = [{"H": e["H"], "V": e["V"]} for e in sorted(d["duples"], key=lambda e: e["state"])]
        return cls(np.array(d["guess"], dtype=int), duples)


def assign_guesses(post, strict=True):
    """Bin-wise argmax guesses, ties to the lowest state index.

    A state's duple in polarization ``pi`` is the bin, among those guessed as
    that state, where its posterior is highest. With ``strict`` a state owning
    no bin at all raises :class:`DegenerateAssignmentError`.
    """
    guess = np.argmax(post.q, axis=-1)
    guess = np.where(post.empty, -1, guess)
    duples = []
    for i in range(post.n_states):
        entry = {}
        for k, pol in enumerate(POLARIZATIONS):
            owned = np.flatnonzero(guess[:, k] == i)
            entry[pol] = int(owned[np.argmax(post.q[owned, k, i])]) if owned.size else None
        duples.append(entry)
    if strict:
        orphans = [i + 1 for i, d in enumerate(duples) if d["H"] is None and d["V"] is None]
        if orphans:
            raise DegenerateAssignmentError(f"states {orphans} own no outcome")
    return GuessAssignment(guess, duples)


def average_guess_probability(post, assign, bin_normalized=False):
    """Average probability of a correct guess using each state's duples.

    The duple scores ``q(i | d) P(d)`` are summed and divided by the total
    evidence of the non-empty bins, i.e. the success rate conditioned on a
    detection. With ``bin_normalized`` every bin gets evidence 1, which is the
    1/2 * 1/N per-duple average over bin-normalized posteriors.
    """
    weight = np.where(post.empty, 0.0, 1.0 if bin_normalized else post.evidence)
    total = weight.sum()
    if total <= 0:
        raise ValueError("no outcome carries evidence")
    score = sum(post.q[t, k, i] * weight[t, k] for i, t, k in assign.duple_cells())
    return float(score / total)


def argmax_guess_probability(post):
    """Assignment-free form ``sum P(t, pi) max_i q(i | t, pi) / sum P``."""
    weight = np.where(post.empty, 0.0, post.evidence)
    return float(np.sum(weight * post.q.max(axis=-1)) / weight.sum())


def gus_bound(n, d):
    """Optimal success probability ``d / n`` for N geometrically uniform states in dimension D."""
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= d <= n, got n={n}, d={d}")
    return d / n


def srm_oracle(ens):
    """Success probability of the square-root measurement on ``ens``.

    ``rho = sum p_i |psi_i><psi_i|`` and ``Pi_i = p_i rho^-1/2 |psi_i><psi_i| rho^-1/2``
    with the inverse square root taken on the support of ``rho``.
    """
    kets = np.stack([s.ket() for s in ens.states])
    norms = np.sum(np.abs(kets) ** 2, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("srm_oracle needs normalized pure states")
    p = ens.priors
    rho = (kets.T * p) @ kets.conj()
    w, u = linalg.eigh(rho)
    cut = max(w.max(), 0.0) * 1e-12
    inv_sqrt = np.where(w > cut, 1.0 / np.sqrt(np.clip(w, cut, None)), 0.0)
    rho_m12 = (u * inv_sqrt) @ u.conj().T
    amp = np.einsum("ij,jk,ik->i", kets.conj(), rho_m12, kets)
    return float(np.sum(p**2 * np.abs(amp) ** 2))
