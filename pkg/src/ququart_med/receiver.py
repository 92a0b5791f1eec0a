"""Forward simulation of the time-multiplexed receiver.

Geometry of the main loop, per splitter encounter:

* first encounter (after the preparation plates): the reflected part leaves
  towards the detectors immediately (pass 0), the transmitted part enters the
  loop;
* every later encounter, after one loop traversal: transmitted light leaves
  (pass n), reflected light circulates again.

Leaving at pass ``n`` puts OMEGA1 light in bin ``2n`` and OMEGA2 light in bin
``2n + 1``. Passes are mutually incoherent, so intensities are accumulated per
bin; within a pass everything is propagated as complex amplitudes.
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .components import FrequencyLabel, bs_amplitudes, waveplate_set_unitary
from .jones import MINUS, PLUS, H, V, phase_shift

POLARIZATIONS = ("H", "V")


@dataclass(frozen=True)
class QuquartState:
    pol: np.ndarray
    freq: FrequencyLabel
    label: int = 0

    def __post_init__(self):
        pol = np.asarray(self.pol, dtype=complex).reshape(2)
        object.__setattr__(self, "pol", pol)
        n2 = np.real(np.vdot(pol, pol))
        if abs(n2 - 1.0) > 1e-12:
            raise ValueError(f"state {self.label}: polarization norm^2 {n2} != 1")

    def ket(self):
        """Vector in the product basis (H w1, V w1, H w2, V w2)."""
        out = np.zeros(4, dtype=complex)
        off = 0 if self.freq is FrequencyLabel.OMEGA1 else 2
        out[off : off + 2] = self.pol
        return out


@dataclass(frozen=True)
class StateEnsemble:
    states: tuple
    priors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        priors = np.asarray(self.priors, dtype=float)
        object.__setattr__(self, "priors", priors)
        if priors.shape != (len(self.states),):
            raise ValueError("one prior per state is required")
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
            raise ValueError(f"priors must be non-negative and sum to 1, got {priors.sum()}")

    def __len__(self):
        return len(self.states)

    @classmethod
    def uniform(cls, states):
        states = tuple(states)
        return cls(states, np.full(len(states), 1.0 / len(states)))


def canonical_ensemble():
    """The eight states |+>,|->,|H>,|V> on w1 followed by the same on w2."""
    pols = (PLUS, MINUS, H, V)
    states = [
        QuquartState(p, f, label=4 * k + j + 1)
        for k, f in enumerate((FrequencyLabel.OMEGA1, FrequencyLabel.OMEGA2))
        for j, p in enumerate(pols)
    ]
    return StateEnsemble.uniform(states)


def _fmt(x):
    return format(float(x), ".17g")


@dataclass
class ProbabilityTable:
    """``p[state, t, pi]`` detection probabilities plus undetected mass.

    ``lossless`` records whether the table came from a loss-free receiver.
    """

    p: np.ndarray
    undetected: np.ndarray
    lossless: bool = False

    @property
    def n_states(self):
        return self.p.shape[0]

    @property
    def n_bins(self):
        return self.p.shape[1]

    def detected(self):
        return self.p.sum(axis=(1, 2))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state", "t", "pi", "probability"])
        for i in range(self.n_states):
            for t in range(self.n_bins):
                for k, pol in enumerate(POLARIZATIONS):
                    w.writerow([i + 1, t, pol, _fmt(self.p[i, t, k])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, undetected=None):
        """Parse :meth:`to_csv` output; ``source`` is a path or the CSV text.

        The CSV carries detected cells only, so ``undetected`` defaults to the
        complement of each row.
        """
        text = source if "\n" in str(source) else open(source, encoding="utf-8").read()
        rows = list(csv.DictReader(io.StringIO(text)))
        n_states = max(int(r["state"]) for r in rows)
        n_bins = max(int(r["t"]) for r in rows) + 1
        p = np.zeros((n_states, n_bins, 2))
        for r in rows:
            p[int(r["state"]) - 1, int(r["t"]), POLARIZATIONS.index(r["pi"])] = float(r["probability"])
        if undetected is None:
            undetected = 1.0 - p.sum(axis=(1, 2))
        return cls(p, np.asarray(undetected, dtype=float))

    def to_json(self):
        return {
            "p": self.p.tolist(),
            "undetected": self.undetected.tolist(),
            "lossless": self.lossless,
        }

    @classmethod
    def from_json(cls, d):
        return cls(np.array(d["p"], dtype=float), np.array(d["undetected"], dtype=float), bool(d.get("lossless", False)))

    def dumps(self):
        return json.dumps(self.to_json())


def _loop_operator(params):
    loop = waveplate_set_unitary(params.loop_set)
    loop = phase_shift(params.phase2) @ phase_shift(params.phase1) @ loop
    return loop * np.sqrt(1.0 - params.bs.loss_loop)


def _mv(m, a):
    # Element-wise 2x2 product so each column's bits do not depend on the batch size.
    return m[:, 0:1] * a[0] + m[:, 1:2] * a[1]


def simulate_distribution(ens, params):
    """Propagate every state of ``ens`` through the receiver.

    Returns a :class:`ProbabilityTable` with ``2 * params.n_passes`` bins.
    The undetected mass is accumulated independently of the detected one
    (splitter loss, loop loss and the light still circulating after the last
    measured pass), so ``detected + undetected = 1`` is a real check.
    """
    for s in ens.states:
        if abs(np.real(np.vdot(s.pol, s.pol)) - 1.0) > 1e-12:
            raise ValueError(f"state {s.label} is not normalized")
    n = params.n_passes
    reflect, transmit = bs_amplitudes(params.bs)
    loop = _loop_operator(params)
    prep = waveplate_set_unitary(params.prep_set)
    loss_bs, loss_loop = params.bs.loss_bs, params.bs.loss_loop

    amps = _mv(prep, np.stack([s.pol for s in ens.states], axis=1))
    exits = np.empty((n, 2, len(ens)))
    lost = np.zeros(len(ens))

    def _norm2(a):
        return np.sum(np.abs(a) ** 2, axis=0)

    lost += loss_bs * _norm2(amps)
    exits[0] = np.abs(_mv(reflect, amps)) ** 2
    amps = _mv(transmit, amps)
    for k in range(1, n):
        lost += loss_loop * _norm2(amps)
        amps = _mv(loop, amps)
        lost += loss_bs * _norm2(amps)
        exits[k] = np.abs(_mv(transmit, amps)) ** 2
        amps = _mv(reflect, amps)
    tail = _norm2(amps)

    ext = params.vbg.as_array()[:, None]
    p = np.zeros((len(ens), 2 * n, 2))
    for i, s in enumerate(ens.states):
        if s.freq is FrequencyLabel.OMEGA1:
            p[i, 0::2, :] = exits[:, :, i]
        else:
            p[i, 1::2, :] = exits[:, :, i] * (1.0 - ext[:, 0])
            p[i, 0::2, :] = exits[:, :, i] * ext[:, 0]
    return ProbabilityTable(p, lost + tail, lossless=params.lossless)


def collected_fraction(table, lossless=False, priors=None):
    """Prior-weighted detected probability.

    With ``lossless=True`` the table must come from a loss-free receiver, so
    the result measures truncation of the pass sequence alone.
    """
    if lossless and not table.lossless:
        raise ValueError("lossless collected fraction requested on a lossy table")
    if priors is None:
        priors = np.full(table.n_states, 1.0 / table.n_states)
    return float(np.dot(priors, table.detected()))


def condition_on_detection(table):
    """Renormalize each state's row over its detected mass."""
    det = table.detected()
    if np.any(det <= 0):
        bad = [i + 1 for i in np.flatnonzero(det <= 0)]
        raise ValueError(f"states {bad} have zero detected probability")
    return ProbabilityTable(table.p / det[:, None, None], np.zeros_like(det), table.lossless)
