import math

import numpy as np
import pytest

from modone.errors import DegenerateError, DomainError
from modone.localstats import c_factor, k_level_correlation
from modone.montecarlo import (
    ExperimentPlan,
    decay_fit,
    draw_alphas,
    expectation_estimate,
    manifest,
    nm_schedule,
    run_plan,
    sample_correlations,
    variance_estimate,
    write_variance_csv,
)
from modone.oscint import AlphaInterval
from modone.seqgen import PointSet, SequenceSpec, frac_parts
from modone.windows import Window


def plan(**kw):
    base = dict(k=2, J=AlphaInterval(8), N_grid=(256, 512), samples=4, seed=42, window=Window.gaussian(1, 8))
    base.update(kw)
    return ExperimentPlan(**base)


def test_two_samples_mean_is_average():
    p = plan(samples=2)
    alphas = draw_alphas(p, 256)
    vals = [k_level_correlation(frac_parts(SequenceSpec(a, 1, 256)), p.window, 2).value for a in alphas]
    mean, se, ref = expectation_estimate(p, 256)
    assert mean == (vals[0] + vals[1]) / 2
    assert ref == c_factor(2, 256) * p.window.integral()
    assert expectation_estimate(plan(samples=2), 256) == (mean, se, ref)


def test_alphas_in_interval_and_prefix_stable():
    p = plan(samples=8)
    a8 = draw_alphas(p, 512)
    a16 = draw_alphas(plan(samples=16), 512)
    assert np.all((a8 >= 8) & (a8 < 9))
    assert np.array_equal(a16[:8], a8)
    assert not np.array_equal(draw_alphas(p, 256), a8)


def test_doubling_samples_reproduces_first_half():
    y4 = sample_correlations(plan(samples=4), 256)
    y8 = sample_correlations(plan(samples=8), 256)
    assert np.array_equal(y8[:4], y4)


def test_point_mass_hook():
    p = plan(point_mass=8.37, samples=5)
    mean, se, _ = expectation_estimate(p, 256)
    single = k_level_correlation(frac_parts(SequenceSpec(8.37, 1, 256)), p.window, 2).value
    assert mean == single and se == 0.0


def test_alpha_independent_points_variance():
    pts = PointSet.external(np.random.default_rng(0).random(300))
    p = plan(points=pts, samples=6)
    R = k_level_correlation(pts, p.window, 2).value
    ref = c_factor(2, 300) * p.window.integral()
    var, se = variance_estimate(p, 256)
    assert var == (R - ref) ** 2
    assert se == 0.0


def test_variance_uses_fixed_reference_not_sample_mean():
    p = plan(samples=6)
    y = sample_correlations(p, 256)
    ref = c_factor(2, 256) * p.window.integral()
    var, _ = variance_estimate(p, 256)
    assert var == pytest.approx(np.mean((y - ref) ** 2), rel=1e-14)
    assert var >= np.var(y)


def test_jackknife_matches_classical_formula():
    p = plan(samples=6)
    y = sample_correlations(p, 256)
    _, se, _ = expectation_estimate(p, 256)
    assert se == pytest.approx(np.std(y, ddof=1) / math.sqrt(y.size), rel=1e-10)


def test_smooth_window_required():
    with pytest.raises(DomainError):
        expectation_estimate(plan(window=Window.box((-0.5, 0.5))), 256)


def test_plan_validation():
    with pytest.raises(DomainError):
        plan(samples=1)
    with pytest.raises(DomainError):
        plan(N_grid=(512, 256))
    with pytest.raises(DomainError):
        plan(k=3)
    with pytest.raises(DomainError):
        expectation_estimate(plan(), 1000)


def test_decay_fit_examples():
    Ns = [100, 200, 400, 800]
    f = decay_fit([(n, 1 / n) for n in Ns])
    assert f.rho_hat == pytest.approx(1.0, abs=1e-12)
    assert max(map(abs, f.residuals)) < 1e-12
    for c in (0.01, 7.0):
        assert decay_fit([(n, c * n**-2.0) for n in Ns]).rho_hat == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(DegenerateError):
        decay_fit([(1, 1.0), (2, 0.0), (3, 1.0)])
    with pytest.raises(DomainError):
        decay_fit([(1, 1.0), (2, 0.5)])


def test_nm_schedule_examples():
    assert nm_schedule(2, 5) == [1, 2, 3, 4, 5]
    assert nm_schedule(1, 4) == [1, 4, 9, 16]
    assert nm_schedule(0.5, 3) == [1, 16, 81]
    with pytest.raises(DomainError):
        nm_schedule(0, 3)


def test_nm_schedule_ratio_tends_to_one():
    s = nm_schedule(0.7, 3000)
    assert s == sorted(set(s))
    assert s[-1] / s[-2] < 1.01


def test_expectation_small_scale_statistics():
    p = plan(N_grid=(2000,), samples=16, J=AlphaInterval(8))
    mean, se, ref = expectation_estimate(p, 2000)
    assert abs(mean - (1 - 1 / 2000)) <= 3 * se + 1e-12


def test_run_plan_and_outputs(tmp_path):
    p = plan(N_grid=(64, 128, 256), samples=3)
    run = run_plan(p)
    assert [r["N"] for r in run.rows] == [64, 128, 256]
    m = manifest(run)
    assert m["plan"]["seed"] == 42 and m["fit"] is not None
    write_variance_csv(tmp_path / "v.csv", run.rows)
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "N,variance,stderr" and len(lines) == 4
    # resuming from saved rows skips recomputation
    resumed = run_plan(p, done={64: run.rows[0]})
    assert resumed.rows == run.rows
