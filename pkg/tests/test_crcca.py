import warnings

import numpy as np
import pytest

from crcca.crcca import (ConvergenceWarning, CrccaConfig, evaluate, fit_crcca, sweep_levels)
from crcca.dataset import PairedDataset, SplitSpec, split
from crcca.quantizer import RankDeficientError
from crcca.synthgen import generate


def test_objective_at_nine_levels(crcca9):
    assert crcca9.objective == pytest.approx(0.95, abs=0.03)
    assert crcca9.converged


def test_alignment_orthogonal(crcca9):
    for r in (crcca9.align_u, crcca9.align_v):
        np.testing.assert_allclose(r @ r.T, np.eye(2), atol=1e-8)


def test_objective_trace_non_decreasing(crcca9):
    assert np.all(np.diff(crcca9.objective_trace) >= -1e-6)
    # the last entry is the aligned objective, never below the unaligned one
    assert crcca9.objective_trace[-1] >= crcca9.objective_trace[-2] - 1e-9


def test_distortion_non_increasing_across_half_steps(crcca9):
    assert np.all(np.diff(crcca9.distortion_trace) <= 1e-6)


def test_evaluate_on_train_matches_trace(crcca9, synth):
    rep = evaluate(crcca9, synth)
    assert rep.objective == pytest.approx(crcca9.objective_trace[-1], abs=1e-9)
    assert rep.entropy_u == crcca9.entropy_u
    assert rep.missing_mass_u >= 0


def test_distortion_identity(crcca9, synth):
    u, v = crcca9.transform(synth.x, synth.y)
    n, d = u.shape
    lhs = ((u - v) ** 2).sum(axis=1).mean()
    rhs = 2 * d - 2 * np.einsum("ij,ij->", u, v) / n
    assert abs(lhs - rhs) <= 1e-8
    rep = evaluate(crcca9, synth)
    assert abs(rep.distortion - (2 * d - 2 * rep.correlations.sum())) <= 1e-8


def test_whitening_every_half_step(synth):
    worst = [0.0, 0.0]

    def check(it, side, u, v):
        w = u if side == "u" else v
        worst[0] = max(worst[0], np.abs(w.mean(axis=0)).max())
        worst[1] = max(worst[1], np.abs(w.T @ w / w.shape[0] - np.eye(w.shape[1])).max())

    fit_crcca(synth, CrccaConfig(levels=5), callback=check)
    assert worst[0] <= 1e-8
    assert worst[1] <= 1e-6


def test_eval_split_close_to_train():
    data = generate(5000, 2)
    train, ev, _ = split(data, SplitSpec(seed=0))
    model = fit_crcca(train, CrccaConfig(levels=9))
    assert abs(evaluate(model, ev).objective - model.objective) <= 0.05


def test_identity_coupling():
    x = np.random.default_rng(0).random((10_000, 2))
    model = fit_crcca(PairedDataset(x, x), CrccaConfig(levels=16))
    assert model.objective >= 0.99


def _independent(seed, n=5000):
    rng = np.random.default_rng(seed)
    return PairedDataset(rng.random((n, 2)), rng.random((n, 2)))


def test_independent_views():
    model = fit_crcca(_independent(1), CrccaConfig(levels=9))
    assert abs(evaluate(model, _independent(101)).objective) < 0.15


def test_independent_train_bias_grows_with_cells():
    # cell means overfit noise, so the train objective on independent data is
    # a positive bias roughly proportional to the number of occupied cells
    objs = [fit_crcca(_independent(1), CrccaConfig(levels=n)).objective for n in (2, 5, 9)]
    assert 0 < objs[0] < objs[1] < objs[2]
    assert objs[0] < 0.05


def test_row_permutation_invariance(synth_small):
    perm = np.random.default_rng(3).permutation(synth_small.n)
    a = fit_crcca(synth_small, CrccaConfig(levels=7))
    b = fit_crcca(synth_small.subset(perm), CrccaConfig(levels=7))
    assert abs(a.objective - b.objective) <= 1e-9


def test_transform_dimension_check(crcca9):
    with pytest.raises(ValueError, match="do not match"):
        evaluate(crcca9, PairedDataset(np.zeros((5, 3)), np.zeros((5, 2))))


def test_config_validation():
    for bad in ({"levels": 1}, {"dims": 0}, {"max_iters": 0}, {"tol": 0.0}, {"levels": 2.5}):
        with pytest.raises(ValueError):
            CrccaConfig(**bad)


def test_dims_exceed_views(synth_small):
    with pytest.raises(ValueError, match="dims=3"):
        fit_crcca(synth_small, CrccaConfig(dims=3))


def test_rank_deficiency_propagates():
    rng = np.random.default_rng(2)
    x = np.repeat([[0.0, 0.0], [1.0, 1.0]], 50, axis=0) + 1e-3 * rng.random((100, 2))
    with pytest.raises(RankDeficientError):
        fit_crcca(PairedDataset(x, rng.random((100, 2))), CrccaConfig(levels=2))


def test_non_convergence_is_reported(synth_small):
    with pytest.warns(ConvergenceWarning):
        model = fit_crcca(synth_small, CrccaConfig(levels=9, max_iters=1))
    assert not model.converged
    assert len(model.objective_trace) == 2


def test_sweep_levels(synth):
    train, ev, _ = split(synth, SplitSpec(seed=0))
    points = sweep_levels(train, ev, [2, 4, 8, 16])
    assert [p.levels for p in points] == [2, 4, 8, 16]
    assert all(p.error is None for p in points)
    ent = [p.entropy_u for p in points]
    assert np.all(np.diff(ent) >= -1e-12)
    again = sweep_levels(train, ev, [4])
    assert again[0].eval_objective == points[1].eval_objective


def test_sweep_objective_increasing(synth):
    train, ev, _ = split(synth, SplitSpec(seed=0))
    objs = [p.eval_objective for p in sweep_levels(train, ev, [5, 9, 13])]
    assert objs[0] < objs[1] < objs[2]


def test_sweep_records_failures():
    rng = np.random.default_rng(2)
    x = np.repeat([[0.0, 0.0], [1.0, 1.0]], 50, axis=0) + 1e-3 * rng.random((100, 2))
    data = PairedDataset(x, rng.random((100, 2)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        points = sweep_levels(data, data, [2, 600])
    assert points[0].error is not None and np.isnan(points[0].eval_objective)
    with pytest.raises(ValueError):
        sweep_levels(data, data, [])
