import json

import numpy as np
import pytest

from ququart_med.calibration import (
    ANGLE_NAMES, LOOP_TARGET, CalibrationError, OptimizationResult, default_calibration, evaluate, fit_unitary,
    get_angles, guess_probability, optimize_receiver, paper_params, set_angles,
)
from ququart_med.components import waveplate_set_unitary
from ququart_med.jones import IDENTITY, PLUS, H, apply, fidelity, hwp, overlap2


@pytest.mark.parametrize("target", [IDENTITY, LOOP_TARGET, hwp(np.pi / 8)], ids=["identity", "s3-quarter", "hwp-22.5"])
def test_fit_unitary_reaches_target(target):
    w = fit_unitary(target)
    assert fidelity(waveplate_set_unitary(w), target) >= 1 - 1e-9


def test_fitted_hwp_maps_h_to_plus():
    w = fit_unitary(hwp(np.pi / 8))
    assert overlap2(apply(waveplate_set_unitary(w), H), PLUS) == pytest.approx(1.0, abs=1e-9)


def test_fit_unitary_rejects_non_unitary():
    with pytest.raises(ValueError):
        fit_unitary(np.diag([1.0, 0.5]))


def test_fit_unitary_reports_failure(monkeypatch):
    # Every SU(2) element is reachable, so force a stuck optimizer.
    from types import SimpleNamespace

    from ququart_med import calibration

    monkeypatch.setattr(calibration, "minimize", lambda f, x0, **kw: SimpleNamespace(x=x0, fun=f(x0)))
    with pytest.raises(CalibrationError):
        fit_unitary(LOOP_TARGET, max_restarts=2)


def test_fit_unitary_restarts_never_hurt():
    a = fidelity(waveplate_set_unitary(fit_unitary(LOOP_TARGET, max_restarts=1)), LOOP_TARGET)
    b = fidelity(waveplate_set_unitary(fit_unitary(LOOP_TARGET, max_restarts=4)), LOOP_TARGET)
    assert b >= a


def test_default_calibration(ideal):
    assert ideal.lossless and ideal.n_passes == 4
    assert ideal.bs.r_h == ideal.bs.r_v == 0.275
    _, _, assign, pg = evaluate(ideal)
    assert pg == pytest.approx(0.5, abs=1e-6)
    assert assign.duples[0]["H"] == 2
    h_bins = [d["H"] for d in assign.duples]
    assert len(set(h_bins)) == 8


def test_paper_params_only_change_hardware(ideal, paper):
    assert paper.prep_set == ideal.prep_set and paper.loop_set == ideal.loop_set
    assert (paper.bs.r_h, paper.bs.r_v, paper.bs.loss_bs, paper.bs.loss_loop) == (0.26, 0.29, 0.21, 0.11)


def test_angle_round_trip(paper):
    x = get_angles(paper, ANGLE_NAMES)
    assert set_angles(paper, ANGLE_NAMES, x) == paper
    moved = set_angles(paper, ("phase1",), [-0.5])
    assert moved.phase1 == pytest.approx(2 * np.pi - 0.5)


def test_optimize_from_optimum_stays(ideal):
    res = optimize_receiver(ideal, max_restarts=2)
    assert res.objective == pytest.approx(0.5, abs=1e-6)
    assert res.objective >= guess_probability(ideal)


def test_optimize_recovers_perturbed_start(ideal):
    rng = np.random.default_rng(11)
    x = get_angles(ideal, ANGLE_NAMES) + np.radians(rng.uniform(-10, 10, 6))
    start = set_angles(ideal, ANGLE_NAMES, x)
    assert guess_probability(start) < 0.5 - 1e-3
    res = optimize_receiver(start, seed=3, max_restarts=3)
    assert res.objective >= 0.5 - 1e-4


def test_optimize_paper_hardware_stays_below_ideal(paper):
    res = optimize_receiver(paper, max_restarts=2)
    assert 0.487 <= res.objective < 0.5
    assert res.objective >= guess_probability(paper)


def test_optimize_history_monotone_and_reproducible(paper):
    a = optimize_receiver(paper, free=("loop.h", "loop.q1"), max_restarts=2, seed=5)
    b = optimize_receiver(paper, free=("loop.h", "loop.q1"), max_restarts=2, seed=5)
    assert a.objective == b.objective and a.params == b.params and a.history == b.history
    for trace in a.history:
        assert all(y >= x - 1e-15 for x, y in zip(trace, trace[1:]))


def test_optimize_validation(ideal):
    with pytest.raises(ValueError):
        optimize_receiver(ideal, tol=0)
    with pytest.raises(ValueError):
        optimize_receiver(ideal, free=("nope",))


def test_result_json(ideal):
    res = OptimizationResult(ideal, 0.5, 3, True, 1)
    d = json.loads(json.dumps(res.to_json()))
    assert d["params"]["prep_set"] == ideal.prep_set.to_degrees()
    back = type(ideal).from_dict(d["params"])
    np.testing.assert_allclose(get_angles(back, ANGLE_NAMES), get_angles(ideal, ANGLE_NAMES), atol=1e-12)
    assert back.bs == ideal.bs and back.vbg == ideal.vbg


def test_default_calibration_cached():
    assert default_calibration() == default_calibration()
    assert paper_params().prep_set == default_calibration().prep_set
