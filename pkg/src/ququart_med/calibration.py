"""Waveplate calibration and receiver optimization.

Both searches use scipy's Nelder-Mead simplex with deterministic multistarts:
start 0 is the caller's point (or all-zero angles), later starts are drawn
uniformly from [0, pi)^k with a seeded generator.
"""

import dataclasses
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .components import BSParams, ReceiverParams, VBGParams, WaveplateSet, waveplate_set_unitary
from .discrimination import (
    DegenerateAssignmentError,
    argmax_guess_probability,
    assign_guesses,
    average_guess_probability,
    bayes_posteriors,
)
from .jones import fidelity, is_unitary, rotation_s3
from .receiver import canonical_ensemble, simulate_distribution

# Preparation stage maps |+> to |->, so |+>|w1> is read out as H after one loop.
PREP_TARGET = rotation_s3(np.pi)
LOOP_TARGET = rotation_s3(np.pi / 2)

ANGLE_NAMES = ("prep.q1", "prep.h", "prep.q2", "loop.q1", "loop.h", "loop.q2")
PHASE_NAMES = ("phase1", "phase2")


class CalibrationError(RuntimeError):
    pass


def fit_unitary(target, tol=1e-9, max_restarts=8, seed=0):
    """Waveplate angles whose QWP-HWP-QWP product matches ``target`` up to phase.

    Raises :class:`CalibrationError` if no restart reaches fidelity ``1 - tol``.
    """
    target = np.asarray(target, dtype=complex)
    if not is_unitary(target, atol=1e-9):
        raise ValueError("target must be unitary")
    rng = np.random.default_rng(seed)

    def infid(x):
        return 1.0 - fidelity(waveplate_set_unitary(WaveplateSet(*x)), target) ** 2

    best_x, best_f = None, np.inf
    for r in range(max_restarts):
        x0 = np.zeros(3) if r == 0 else rng.uniform(0, np.pi, 3)
        res = minimize(
            infid, x0, method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 4000},
        )
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
        if 1.0 - np.sqrt(max(1.0 - best_f, 0.0)) <= tol * 1e-3:
            break
    fid = fidelity(waveplate_set_unitary(WaveplateSet(*best_x)), target)
    if fid < 1.0 - tol:
        raise CalibrationError(f"best fidelity {fid:.12f} after {max_restarts} restarts")
    return WaveplateSet(*best_x)


@functools.lru_cache(maxsize=None)
def _canonical_sets():
    return fit_unitary(PREP_TARGET), fit_unitary(LOOP_TARGET)


def default_calibration():
    """Ideal receiver: calibrated plates, lossless symmetric R = 0.275, four passes."""
    prep, loop = _canonical_sets()
    return ReceiverParams(
        prep_set=prep,
        loop_set=loop,
        bs=BSParams(0.275, 0.275, 0.0, 0.0),
        vbg=VBGParams(0.0, 0.0),
        n_passes=4,
    )


def paper_params():
    """Design angles with the measured beam splitter and delay-line imperfections."""
    return dataclasses.replace(
        default_calibration(),
        bs=BSParams(r_h=0.26, r_v=0.29, loss_bs=0.21, loss_loop=0.11),
        vbg=VBGParams(ext_h=0.0125, ext_v=0.0055),
    )


def guess_probability(params, ens=None):
    """Assignment-free average success probability of ``params``."""
    ens = canonical_ensemble() if ens is None else ens
    post = bayes_posteriors(simulate_distribution(ens, params), ens.priors)
    return argmax_guess_probability(post)


def evaluate(params, ens=None, bin_normalized=False):
    """Simulate and discriminate; returns (table, posteriors, assignment, P_guess)."""
    ens = canonical_ensemble() if ens is None else ens
    table = simulate_distribution(ens, params)
    post = bayes_posteriors(table, ens.priors)
    assign = assign_guesses(post)
    return table, post, assign, average_guess_probability(post, assign, bin_normalized)


def get_angles(params, names):
    vals = {
        "prep.q1": params.prep_set.q1, "prep.h": params.prep_set.h, "prep.q2": params.prep_set.q2,
        "loop.q1": params.loop_set.q1, "loop.h": params.loop_set.h, "loop.q2": params.loop_set.q2,
        "phase1": params.phase1, "phase2": params.phase2,
    }
    return np.array([vals[n] for n in names])


def set_angles(params, names, x):
    prep = dict(q1=params.prep_set.q1, h=params.prep_set.h, q2=params.prep_set.q2)
    loop = dict(q1=params.loop_set.q1, h=params.loop_set.h, q2=params.loop_set.q2)
    phases = dict(phase1=params.phase1, phase2=params.phase2)
    for n, v in zip(names, x):
        v = float(v)
        if n.startswith("prep."):
            prep[n[5:]] = v
        elif n.startswith("loop."):
            loop[n[5:]] = v
        else:
            phases[n] = float(np.mod(v, 2 * np.pi))
    return dataclasses.replace(
        params, prep_set=WaveplateSet(**prep), loop_set=WaveplateSet(**loop), **phases
    )


FREE_PRESETS = {
    "angles": ANGLE_NAMES,
    "prep": ANGLE_NAMES[:3],
    "loop": ANGLE_NAMES[3:],
    "all": ANGLE_NAMES + PHASE_NAMES,
}


@dataclass
class OptimizationResult:
    params: ReceiverParams
    objective: float
    iterations: int
    converged: bool
    restarts_used: int
    history: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "params": self.params.to_dict(),
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
        }


def optimize_receiver(initial, free=ANGLE_NAMES, tol=1e-9, max_restarts=8, seed=0, ens=None):
    """Maximize the average guess probability over the ``free`` angles.

    ``free`` lists parameter names (see :data:`ANGLE_NAMES`, :data:`PHASE_NAMES`);
    everything else stays fixed. The objective is the assignment-free
    success probability. Restart 0 starts at ``initial``; the best restart wins,
    ties going to the lowest restart index, and the result is never worse than
    ``initial`` itself.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    free = tuple(free)
    unknown = set(free) - set(ANGLE_NAMES + PHASE_NAMES)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")
    ens = canonical_ensemble() if ens is None else ens
    rng = np.random.default_rng(seed)

    def objective(x):
        return guess_probability(set_angles(initial, free, x), ens)

    x_init = get_angles(initial, free)
    best = (objective(x_init), x_init, False)
    iterations = 0
    restarts = 0
    history = []
    for r in range(max_restarts):
        x0 = x_init if r == 0 else rng.uniform(0, np.pi, len(free))
        trace = []
        res = minimize(
            lambda x: -objective(x), x0, method="Nelder-Mead",
            callback=lambda xk: trace.append(objective(xk)),
            options={"xatol": 1e-10, "fatol": tol, "maxiter": 400 * len(free), "adaptive": len(free) > 4},
        )
        restarts += 1
        iterations += res.nit
        history.append(trace)
        if -res.fun > best[0] or (r == 0 and -res.fun >= best[0]):
            best = (-res.fun, res.x, bool(res.success))
    obj, x, converged = best
    return OptimizationResult(
        params=set_angles(initial, free, x),
        objective=float(obj),
        iterations=iterations,
        converged=converged,
        restarts_used=restarts,
        history=history,
    )


__all__ = [
    "CalibrationError",
    "DegenerateAssignmentError",
    "OptimizationResult",
    "default_calibration",
    "evaluate",
    "fit_unitary",
    "guess_probability",
    "optimize_receiver",
    "paper_params",
]
