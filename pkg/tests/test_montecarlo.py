import json

import numpy as np
import pytest

from ququart_med.montecarlo import MCReport, UncertaintyModel, draw_generator, mc_guess_error, perturb


def test_model_validation():
    with pytest.raises(ValueError):
        UncertaintyModel(sigma_angle=-1)
    with pytest.raises(ValueError):
        UncertaintyModel(n_samples=1)
    with pytest.raises(ValueError):
        UncertaintyModel(distribution="cauchy")


def test_draw_generator_is_philox_keyed():
    a = draw_generator(7, 3).random(4)
    b = draw_generator(7, 3).random(4)
    c = draw_generator(7, 4).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert isinstance(draw_generator(0, 0).bit_generator, np.random.Philox)


def test_zero_sigma_leaves_params(paper):
    model = UncertaintyModel(sigma_angle=0.0, sigma_r=0.0)
    assert perturb(paper, model, draw_generator(1, 0)) == paper


def test_perturb_deterministic(paper):
    model = UncertaintyModel()
    seq = [perturb(paper, model, draw_generator(5, j)) for j in range(5)]
    again = [perturb(paper, model, draw_generator(5, j)) for j in range(5)]
    assert seq == again
    assert len({p.bs.r_h for p in seq}) == 5


def test_perturb_touches_only_angles_and_reflectivities(paper):
    p = perturb(paper, UncertaintyModel(), draw_generator(0, 0))
    assert p.vbg == paper.vbg and p.phase1 == paper.phase1 and p.n_passes == paper.n_passes
    assert p.bs.loss_bs == paper.bs.loss_bs and p.bs.loss_loop == paper.bs.loss_loop
    assert p.prep_set != paper.prep_set and p.bs.r_h != paper.bs.r_h


@pytest.mark.parametrize("distribution, n", [("gaussian", 100_000), ("uniform", 20_000)])
def test_perturbed_reflectivity_mean(paper, distribution, n):
    model = UncertaintyModel(distribution=distribution)
    r = np.array([perturb(paper, model, draw_generator(2, j)).bs.r_h for j in range(n)])
    assert abs(r.mean() - 0.26) < 3 * 0.02 / np.sqrt(n)
    assert r.std() == pytest.approx(0.02, rel=0.03)


def test_reflectivity_clamped(paper):
    model = UncertaintyModel(sigma_r=5.0)
    for j in range(50):
        bs = perturb(paper, model, draw_generator(0, j)).bs
        assert 0.0 <= bs.r_h <= 1 - bs.loss_bs and 0.0 <= bs.r_v <= 1 - bs.loss_bs


def test_zero_sigma_std_exactly_zero(ens, paper):
    rep = mc_guess_error(paper, ens, UncertaintyModel(sigma_angle=0.0, sigma_r=0.0, n_samples=5))
    assert rep.std == 0.0
    assert np.all(rep.per_bin_std == 0.0)


def test_report_reproducible(ens, paper):
    model = UncertaintyModel(n_samples=40, seed=9)
    a = mc_guess_error(paper, ens, model)
    b = mc_guess_error(paper, ens, model)
    assert a.mean == b.mean and a.std == b.std and np.array_equal(a.per_bin_std, b.per_bin_std)


def test_serial_and_parallel_bitwise(ens, paper):
    model = UncertaintyModel(n_samples=30, seed=4)
    a = mc_guess_error(paper, ens, model)
    b = mc_guess_error(paper, ens, model, workers=3)
    assert a.mean == b.mean and a.std == b.std
    assert np.array_equal(a.samples, b.samples) and np.array_equal(a.per_bin_std, b.per_bin_std)


def test_std_grows_with_sigma_angle(ens, paper):
    base = mc_guess_error(paper, ens, UncertaintyModel(sigma_angle=1.0, sigma_r=0.0, n_samples=200, seed=1))
    wide = mc_guess_error(paper, ens, UncertaintyModel(sigma_angle=2.0, sigma_r=0.0, n_samples=200, seed=1))
    assert wide.std > base.std


def test_std_vanishes_with_sigmas(ens, paper):
    stds = [
        mc_guess_error(paper, ens, UncertaintyModel(sigma_angle=s, sigma_r=s / 50, n_samples=100, seed=3)).std
        for s in (1.0, 0.1, 0.01)
    ]
    assert stds[0] > stds[1] > stds[2] > 0


def test_draws_in_unit_interval(ens, paper):
    rep = mc_guess_error(paper, ens, UncertaintyModel(sigma_angle=20.0, sigma_r=0.2, n_samples=50))
    assert np.all((rep.samples >= 0) & (rep.samples <= 1))
    assert rep.samples_used + rep.failed == 50


def test_report_serialization(ens, paper, tmp_path):
    rep = mc_guess_error(paper, ens, UncertaintyModel(n_samples=10))
    back = MCReport.from_json(json.loads(json.dumps(rep.to_json())))
    assert back.mean == rep.mean and np.array_equal(back.per_bin_std, rep.per_bin_std)
    path = tmp_path / "std.csv"
    text = rep.per_bin_csv(path)
    assert path.read_text() == text
    lines = text.splitlines()
    assert lines[0] == "state,t,pi,std" and len(lines) == 1 + 8 * 8 * 2
    assert lines[1].startswith("1,0,H,")
