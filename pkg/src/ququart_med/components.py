"""Models of the receiver's optical elements and its timing budget."""

import enum
from dataclasses import dataclass, field

import numpy as np

from .jones import hwp, qwp

SPEED_OF_LIGHT = 299_792_458.0


class FrequencyLabel(enum.Enum):
    """The two frequency labels of the encoding.

    OMEGA1 is the biexciton line (782.3 nm), OMEGA2 the exciton line
    (780.3 nm); wavelengths are metadata only.
    """

    OMEGA1 = 1
    OMEGA2 = 2


@dataclass(frozen=True)
class WaveplateSet:
    """QWP-HWP-QWP sequence given by fast-axis angles in radians.

    Angles are reduced to [0, pi); every plate is pi-periodic so the reduction
    does not change the operator.
    """

    q1: float = 0.0
    h: float = 0.0
    q2: float = 0.0

    def __post_init__(self):
        for name in ("q1", "h", "q2"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"waveplate angle {name} must be finite, got {val}")
            val = float(np.mod(val, np.pi))
            object.__setattr__(self, name, 0.0 if val >= np.pi else val)

    def as_array(self):
        return np.array([self.q1, self.h, self.q2])

    @classmethod
    def from_degrees(cls, q1, h, q2):
        return cls(*np.radians([q1, h, q2]))

    def to_degrees(self):
        return {k: float(np.degrees(getattr(self, k))) for k in ("q1", "h", "q2")}


def waveplate_set_unitary(w):
    """``qwp(q2) @ hwp(h) @ qwp(q1)``, with the first plate acting first."""
    return qwp(w.q2) @ hwp(w.h) @ qwp(w.q1)


@dataclass(frozen=True)
class BSParams:
    """Unbalanced beam splitter of the main loop.

    ``r_h`` and ``r_v`` are intensity reflectivities, ``loss_bs`` is lost at
    every encounter with the splitter and ``loss_loop`` once per loop
    completion.
    """

    r_h: float = 0.275
    r_v: float = 0.275
    loss_bs: float = 0.0
    loss_loop: float = 0.0

    def __post_init__(self):
        for name in ("r_h", "r_v", "loss_bs", "loss_loop"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"BS parameter {name}={val} outside [0, 1]")
        if self.r_h + self.loss_bs > 1.0 or self.r_v + self.loss_bs > 1.0:
            raise ValueError("reflectivity plus BS loss exceeds 1")


def bs_amplitudes(bs):
    """Return ``(reflect, transmit)`` Jones matrices of the beam splitter.

    Both are real diagonal contractions with
    ``reflect^dag reflect + transmit^dag transmit = (1 - loss_bs) I``.
    """
    keep = np.sqrt(1.0 - bs.loss_bs)
    reflect = np.diag([np.sqrt(bs.r_h), np.sqrt(bs.r_v)]).astype(complex) * keep
    transmit = np.diag([np.sqrt(1.0 - bs.r_h), np.sqrt(1.0 - bs.r_v)]).astype(complex) * keep
    return reflect, transmit


@dataclass(frozen=True)
class VBGParams:
    """Leakage of the frequency-selective delay.

    ``ext_h``/``ext_v`` are the fractions of OMEGA2 intensity that bypass the
    delay loop and land in the undelayed bin, per output polarization.
    """

    ext_h: float = 0.0
    ext_v: float = 0.0

    def __post_init__(self):
        for name in ("ext_h", "ext_v"):
            val = getattr(self, name)
            if not 0.0 <= val < 1.0:
                raise ValueError(f"VBG {name}={val} outside [0, 1)")

    def as_array(self):
        return np.array([self.ext_h, self.ext_v])


@dataclass(frozen=True)
class ReceiverParams:
    """Every physical knob of the receiver.

    ``prep_set`` realizes the preparation stage together with the first
    forward step, ``loop_set`` the full loop evolution. ``phase1`` and
    ``phase2`` are compensators applied after ``loop_set``, in that order.
    """

    prep_set: WaveplateSet = field(default_factory=WaveplateSet)
    loop_set: WaveplateSet = field(default_factory=WaveplateSet)
    phase1: float = 0.0
    phase2: float = 0.0
    bs: BSParams = field(default_factory=BSParams)
    vbg: VBGParams = field(default_factory=VBGParams)
    n_passes: int = 4

    def __post_init__(self):
        if int(self.n_passes) != self.n_passes or self.n_passes < 1:
            raise ValueError(f"n_passes must be a positive integer, got {self.n_passes}")
        if not (np.isfinite(self.phase1) and np.isfinite(self.phase2)):
            raise ValueError("compensator phases must be finite")

    @property
    def n_bins(self):
        return 2 * self.n_passes

    @property
    def lossless(self):
        return self.bs.loss_bs == 0.0 and self.bs.loss_loop == 0.0

    def to_dict(self):
        """JSON-friendly view with angles in degrees."""
        return {
            "prep_set": self.prep_set.to_degrees(),
            "loop_set": self.loop_set.to_degrees(),
            "phase1": float(np.degrees(self.phase1)),
            "phase2": float(np.degrees(self.phase2)),
            "bs": {
                "r_h": self.bs.r_h,
                "r_v": self.bs.r_v,
                "loss_bs": self.bs.loss_bs,
                "loss_loop": self.bs.loss_loop,
            },
            "vbg": {"ext_h": self.vbg.ext_h, "ext_v": self.vbg.ext_v},
            "n_passes": int(self.n_passes),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            prep_set=WaveplateSet.from_degrees(**d["prep_set"]),
            loop_set=WaveplateSet.from_degrees(**d["loop_set"]),
            phase1=float(np.radians(d.get("phase1", 0.0))),
            phase2=float(np.radians(d.get("phase2", 0.0))),
            bs=BSParams(**d["bs"]),
            vbg=VBGParams(**d["vbg"]),
            n_passes=int(d["n_passes"]),
        )


@dataclass(frozen=True)
class TimingConfig:
    l_loop1: float = 0.90
    l_loop2: float = 0.45
    rep_rate: float = 80e6

    def __post_init__(self):
        if min(self.l_loop1, self.l_loop2, self.rep_rate) <= 0:
            raise ValueError("loop lengths and repetition rate must be positive")


def timing_report(t, n_passes):
    """Check that the detection bins fit in one laser period.

    ``span`` is the full ``n_passes`` loop times plus the frequency delay.
    The first bin opens at the first splitter encounter, so the bins actually
    occupy ``window`` = (last arrival - first arrival) + one bin width, and
    ``fits`` compares that window with the repetition period.
    """
    loop_time = t.l_loop1 / SPEED_OF_LIGHT
    delay = t.l_loop2 / SPEED_OF_LIGHT
    period = 1.0 / t.rep_rate
    span = n_passes * loop_time + delay
    last_arrival = (n_passes - 1) * loop_time + delay
    bin_width = min(delay, loop_time - delay) if delay < loop_time else loop_time
    window = last_arrival + bin_width
    return {
        "loop_time": loop_time,
        "delay": delay,
        "span": span,
        "last_arrival": last_arrival,
        "window": window,
        "period": period,
        "fits": bool(window < period),
    }
