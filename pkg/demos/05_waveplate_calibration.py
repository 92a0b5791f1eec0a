"""
Waveplate calibration
=====================

Find QWP-HWP-QWP angles for a few target operations and check them on
input states.
"""

import numpy as np

from ququart_med.calibration import LOOP_TARGET, PREP_TARGET, fit_unitary
from ququart_med.components import waveplate_set_unitary
from ququart_med.jones import MINUS, PLUS, H, V, apply, fidelity, hwp, overlap2

targets = {
    "prep (+ -> -)": PREP_TARGET,
    "loop (quarter turn)": LOOP_TARGET,
    "hwp at 22.5 deg": hwp(np.pi / 8),
}
for name, target in targets.items():
    w = fit_unitary(target)
    u = waveplate_set_unitary(w)
    deg = w.to_degrees()
    print(f"{name:20s} q1={deg['q1']:7.2f} h={deg['h']:7.2f} q2={deg['q2']:7.2f}  fidelity {fidelity(u, target):.12f}")

# The loop operation walks H -> + -> V -> - around the equator.
u = waveplate_set_unitary(fit_unitary(LOOP_TARGET))
state = H
for label in ("+", "V", "-", "H"):
    state = apply(u, state)
    ref = {"+": PLUS, "V": V, "-": MINUS, "H": H}[label]
    print(f"after another loop: overlap with {label} = {overlap2(state, ref):.6f}")
