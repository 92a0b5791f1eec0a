"""Acceptance criteria, one test each; a pass/fail line per criterion is printed
in the terminal summary. Criteria 3 and 7 compare against 0.488 and are
expected to fail with this hardware model."""

import json
import time

import numpy as np
import pytest

from ququart_med import calibration
from ququart_med.cli import main
from ququart_med.components import BSParams, ReceiverParams, VBGParams, WaveplateSet, waveplate_set_unitary
from ququart_med.discrimination import bayes_posteriors, gus_bound, srm_oracle
from ququart_med.jones import hwp, is_unitary, qwp
from ququart_med.montecarlo import UncertaintyModel, mc_guess_error
from ququart_med.receiver import canonical_ensemble, simulate_distribution

TARGET_SIM = 0.488
# 1 - T R^3 for R = 0.275: only the light still circulating after pass 3 is missed.
LOSSLESS_COLLECTED = 0.984922265625


def cli_json(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    assert code == 0, err
    return json.loads(out)


def test_criterion_1_bound(record):
    start = time.perf_counter()
    bound = gus_bound(8, 4)
    srm = srm_oracle(canonical_ensemble())
    elapsed = time.perf_counter() - start
    ok = bound == 0.5 and abs(srm - 0.5) <= 1e-9 and elapsed < 1.0
    record(1, ok, f"gus_bound(8,4)={bound} srm={srm:.12f} ({elapsed:.3f}s)")
    assert ok


def test_criterion_2_ideal_receiver(record, capsys):
    calibration._canonical_sets.cache_clear()
    start = time.perf_counter()
    rep = cli_json(capsys, "simulate", "--ideal")
    elapsed = time.perf_counter() - start
    h_duple = rep["duples"][0]["H"]
    ok = abs(rep["p_guess"] - 0.5) <= 1e-6 and h_duple == 2 and elapsed < 1.0
    record(2, ok, f"p_guess={rep['p_guess']:.10f} psi1 H-duple t={h_duple} ({elapsed:.3f}s)")
    assert ok


def test_criterion_3_imperfect_receiver(record, capsys):
    calibration._canonical_sets.cache_clear()
    start = time.perf_counter()
    rep = cli_json(capsys, "simulate", "--paper")
    elapsed = time.perf_counter() - start
    pg = rep["p_guess"]
    ok = abs(pg - TARGET_SIM) <= 0.003 and elapsed < 1.0
    record(
        3, ok,
        f"p_guess={pg:.6f} (bin-normalized {rep['p_guess_bin_normalized']:.6f}) vs {TARGET_SIM} +- 0.003 ({elapsed:.3f}s)",
    )
    assert ok


def _is_mid_max_mid_min(frac):
    # Some cyclic rotation must read middle, maximum, middle, minimum; the two
    # middles agree to the waveplate-fit tolerance.
    for s in range(4):
        a, b, c, d = np.roll(frac, -s)
        if b > a and b > c and a > d and c > d and a == pytest.approx(c, abs=1e-6):
            return True
    return False


def test_criterion_4_dynamics_pattern(record, ens, ideal):
    p = simulate_distribution(ens, ideal).p
    patterns, shifted = [], []
    for j in range(4):
        even = p[j, 0::2]
        frac = even[:, 0] / even.sum(axis=1)
        patterns.append(_is_mid_max_mid_min(frac))
        shifted.append(bool(np.array_equal(p[4 + j, 1::2], p[j, 0::2]) and np.all(p[4 + j, 0::2] == 0)))
    ok = all(patterns) and all(shifted)
    record(4, ok, f"cyclic pattern per w1 state {patterns}; w2 = w1 shifted one bin {shifted}")
    assert ok


def test_criterion_5_collected_fraction(record, capsys):
    runs = [cli_json(capsys, "simulate", "--ideal")["collected_fraction_lossless"] for _ in range(2)]
    ok = runs[0] >= 0.98 and abs(runs[0] - runs[1]) <= 1e-9 and abs(runs[0] - LOSSLESS_COLLECTED) <= 1e-9
    record(5, ok, f"collected={runs[0]:.12f} (recorded {LOSSLESS_COLLECTED}, run-to-run {abs(runs[0] - runs[1]):.1e})")
    assert ok


def test_criterion_6_montecarlo(record, capsys):
    start = time.perf_counter()
    rep = cli_json(capsys, "montecarlo", "--paper", "--samples", "1000", "--seed", "7")
    elapsed = time.perf_counter() - start
    ok = 0.0005 <= rep["std"] <= 0.01 and rep["samples_used"] >= 1000 and elapsed < 60.0
    record(6, ok, f"std={rep['std']:.6f} mean={rep['mean']:.6f} n={rep['samples_used']} ({elapsed:.2f}s)")
    assert ok


def _closed_loop(capsys, tmp_path):
    counts = tmp_path / "counts.csv"
    cli_json(capsys, "synth", "--paper", "--events", "1000000", "--seed", "7", "--out", str(counts))
    return cli_json(capsys, "analyze", "--paper", "--counts", str(counts))


def test_criterion_7_closed_loop(record, capsys, tmp_path):
    start = time.perf_counter()
    rep = _closed_loop(capsys, tmp_path)
    elapsed = time.perf_counter() - start
    sim = calibration.evaluate(calibration.paper_params())[3]
    ok = abs(rep["p_guess"] - TARGET_SIM) <= 3 * rep["error"] and elapsed < 30.0
    record(
        7, ok,
        f"recovered {rep['p_guess']:.5f} +- {rep['error']:.5f} vs {TARGET_SIM}; vs simulator {sim:.5f}: "
        f"{abs(rep['p_guess'] - sim) / rep['error']:.2f} sigma ({elapsed:.2f}s)",
    )
    assert ok


def test_closed_loop_recovers_simulated_value(capsys, tmp_path):
    rep = _closed_loop(capsys, tmp_path)
    sim = calibration.evaluate(calibration.paper_params())[3]
    assert abs(rep["p_guess"] - sim) <= 3 * rep["error"]


def test_criterion_8_property_suites(record, ens, paper):
    rng = np.random.default_rng(8)
    conservation = 0.0
    parity = True
    for _ in range(25):
        params = ReceiverParams(
            prep_set=WaveplateSet(*rng.uniform(0, np.pi, 3)),
            loop_set=WaveplateSet(*rng.uniform(0, np.pi, 3)),
            phase1=rng.uniform(0, 2 * np.pi),
            phase2=rng.uniform(0, 2 * np.pi),
            bs=BSParams(*rng.uniform(0, 0.5, 2), *rng.uniform(0, 0.3, 2)),
            vbg=VBGParams(0.0, 0.0),
            n_passes=int(rng.integers(1, 9)),
        )
        table = simulate_distribution(ens, params)
        conservation = max(conservation, float(np.abs(table.detected() + table.undetected - 1).max()))
        parity &= bool(np.all(table.p[:4, 1::2] == 0) and np.all(table.p[4:, 0::2] == 0))
    post = bayes_posteriors(simulate_distribution(ens, paper))
    norm = float(np.abs(post.q.sum(axis=-1)[~post.empty] - 1).max())
    angles = rng.uniform(-4 * np.pi, 4 * np.pi, (50, 3))
    unitary = all(
        is_unitary(hwp(a), 1e-12) and is_unitary(qwp(b), 1e-12) and is_unitary(waveplate_set_unitary(WaveplateSet(a, b, c)), 1e-12)
        for a, b, c in angles
    )
    model = UncertaintyModel(n_samples=40, seed=8)
    serial = mc_guess_error(paper, ens, model)
    parallel = mc_guess_error(paper, ens, model, workers=4)
    bitwise = (
        serial.mean == parallel.mean and serial.std == parallel.std
        and np.array_equal(serial.samples, parallel.samples) and np.array_equal(serial.per_bin_std, parallel.per_bin_std)
    )
    ok = conservation <= 1e-9 and norm <= 1e-9 and unitary and parity and bitwise
    record(
        8, ok,
        f"conservation {conservation:.1e}, normalization {norm:.1e}, unitarity {unitary}, parity {parity}, "
        f"serial==parallel {bitwise}",
    )
    assert ok


def test_criterion_9_dataset_ingest_path(record, capsys, tmp_path):
    # The measured headline needs unpublished counts; check that a dataset in
    # the documented format runs end to end, background file included.
    counts = tmp_path / "counts.csv"
    cli_json(capsys, "synth", "--paper", "--events", "600000", "--seed", "9", "--out", str(counts))
    bg = tmp_path / "background.csv"
    bg.write_text("t,pi,rate_hz\n" + "".join(f"{t},{p},0.05\n" for t in range(8) for p in "HV"))
    rep = cli_json(capsys, "analyze", "--paper", "--counts", str(counts), "--background", str(bg))
    ok = 0.0 < rep["p_guess"] < 1.0 and rep["error"] > 0
    record(9, ok, f"not reproducible without raw counts; ingest path gives {rep['p_guess']:.5f} +- {rep['error']:.5f}")
    assert ok
