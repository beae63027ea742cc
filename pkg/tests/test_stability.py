import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlkpp import drivers, stability
from nlkpp.errors import ConfigurationError, DomainError, TailConditionError


def test_perturbation_validation():
    with pytest.raises(ConfigurationError):
        stability.PerturbationSpec("shift")
    with pytest.raises(ConfigurationError):
        stability.PerturbationSpec.scale(0.0)
    with pytest.raises(ConfigurationError):
        stability.PerturbationSpec.noise(1.5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.2, 5.0), min_size=3, max_size=30))
def test_alpha_bounds_distance(ratios):
    U = np.linspace(0.15, 0.1, len(ratios))
    u = U * np.array(ratios)
    a = stability.alpha_of(u, U)
    d = stability.ratio_distance(u, U)
    assert a >= 1.0
    assert a >= 1.0 + d - 1e-12
    assert stability.alpha_of(U, u) == pytest.approx(a, rel=1e-12)


def test_ratio_window_floor():
    U = np.array([1.0, 0.5, 1e-7, 0.0])
    assert stability.ratio_window(U).tolist() == [False, True, False, False]
    with pytest.raises(DomainError):
        stability.ratio_distance(U, np.zeros(4))


def test_fit_contraction_recovers_rate():
    path = drivers.sample_path(drivers.Periodic(1.0, 0.5, 3.0), 0.0, 20.0, 0.01)
    t = np.linspace(0.0, 20.0, 41)
    alpha = 1.0 + 0.3 * np.exp(-0.7 * np.asarray(path.integral(0.0, t)))
    delta, resid = stability.fit_contraction(t, alpha, path)
    assert delta == pytest.approx(0.7, rel=1e-6)
    assert resid < 1e-8
    assert math.isnan(stability.fit_contraction(t, np.ones_like(t), path)[0])


def test_tail_condition_enforced(gaussian_wave):
    with pytest.raises(TailConditionError) as exc:
        stability.make_initial(gaussian_wave, stability.PerturbationSpec.scale(1.05))
    assert exc.value.window[0] >= 10.0
    f = stability.make_initial(gaussian_wave, stability.PerturbationSpec.bump(0.3, 5.0, 0.0))
    assert f.values.max() <= 1.0 and f.values.min() > 0


def test_unperturbed_stays_on_wave(gaussian_wave):
    res = stability.run_stability(gaussian_wave, stability.PerturbationSpec.scale(1.0), horizon=5.0)
    assert np.all(res.distance == 0.0) and np.all(res.alpha == 1.0)
    assert res.passed


def test_bump_short_run(gaussian_wave):
    res = stability.run_stability(gaussian_wave, stability.PerturbationSpec.bump(0.3, 5.0, 0.0), horizon=10.0)
    assert res.times[0] == 0.0 and res.times[-1] == pytest.approx(10.0)
    assert res.alpha_monotone
    assert res.distance[-1] < res.distance[0]
    assert np.all(res.sandwich_gap >= 0)
    assert res.table().shape == (res.times.size, 3)


def test_horizon_beyond_path(gaussian_wave):
    with pytest.raises(DomainError, match="reach"):
        stability.run_stability(gaussian_wave, stability.PerturbationSpec.scale(1.0), horizon=500.0)
