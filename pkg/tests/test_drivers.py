import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlkpp import drivers
from nlkpp.errors import ConfigurationError, DomainError, EstimationError, TruncationError


def test_constant_path_values():
    p = drivers.sample_path(drivers.Constant(1.0), 0.0, 10.0, 0.1)
    assert np.all(p.values == 1.0)
    assert p.sample_times[0] == 0.0 and p.sample_times[-1] == 10.0
    assert np.max(np.diff(p.sample_times)) <= 0.1 + 1e-12


def test_periodic_value_at_quarter_period():
    spec = drivers.Periodic(1.0, 0.5, 2 * math.pi)
    assert spec.value(math.pi / 2) == pytest.approx(1.5, abs=1e-15)
    p = drivers.sample_path(spec, 0.0, 10.0, 0.01)
    assert p(math.pi / 2) == pytest.approx(1.5, abs=1e-4)


def test_telegraph_deterministic():
    spec = drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed=7)
    a = drivers.sample_path(spec, -20.0, 50.0, 0.1)
    b = drivers.sample_path(drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed=7), -20.0, 50.0, 0.1)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.base_times, b.base_times)
    assert set(np.unique(a.values)) <= {0.5, 1.5}


def test_telegraph_prefix_consistent():
    spec = drivers.Telegraph(0.5, 1.5, 2.0, 1.0, seed=3)
    short = drivers.sample_path(spec, 0.0, 30.0, 0.1)
    long = drivers.sample_path(spec, 0.0, 300.0, 0.1)
    t = np.linspace(0, 30, 3001)
    assert np.array_equal(short(t), long(t))


def test_telegraph_holding_times_exponential():
    spec = drivers.Telegraph(0.5, 1.5, 2.0, 0.5, seed=11)
    sw = spec.switch_times(20000.0, +1)
    hold = np.diff(np.concatenate([[0.0], sw]))
    start_low = spec.initial_state() == 0
    lows = hold[0::2] if start_low else hold[1::2]
    highs = hold[1::2] if start_low else hold[0::2]
    # mean holding time in the low state is 1/rate_up, in the high state 1/rate_down
    assert lows.mean() == pytest.approx(0.5, rel=0.05)
    assert highs.mean() == pytest.approx(2.0, rel=0.05)


@pytest.mark.parametrize(
    "factory",
    [
        lambda: drivers.Constant(0.0),
        lambda: drivers.Periodic(1.0, 1.0, 1.0),
        lambda: drivers.Quasiperiodic(1.0, 0.6, 1.0, 0.5),
        lambda: drivers.Telegraph(0.0, 1.0, 1.0, 1.0),
        lambda: drivers.Telegraph(0.5, 1.0, 0.0, 1.0),
    ],
)
def test_invalid_specs_rejected(factory):
    with pytest.raises(ConfigurationError):
        factory()


def test_quasiperiodic_golden_default():
    q = drivers.Quasiperiodic(1.0, 0.2, 1.0, 0.2)
    assert q.freq2 == pytest.approx(drivers.GOLDEN_RATIO)


def test_shift_identity_and_periodicity():
    p = drivers.sample_path(drivers.Periodic(1.0, 0.5, 2 * math.pi), 0.0, 40.0, 0.01)
    s0 = drivers.shift(p, 0.0)
    assert np.array_equal(s0.sample_times, p.sample_times) and np.array_equal(s0.values, p.values)
    q = drivers.shift(p, 2 * math.pi)
    t = np.linspace(0.0, 40.0 - 2 * math.pi, 500)
    assert np.max(np.abs(q(t) - p(t))) < 1e-4


def test_shift_outside_support_without_spec():
    p = drivers.CoefficientPath.from_function(lambda t: 1 + 0 * t, 0.0, 10.0, 0.1)
    with pytest.raises(DomainError):
        drivers.shift(p, 20.0, window=(0.0, 5.0))


def test_shift_regenerates_from_spec():
    spec = drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed=5)
    p = drivers.sample_path(spec, 0.0, 10.0, 0.1)
    q = drivers.shift(p, 50.0, window=(0.0, 10.0))
    ref = drivers.sample_path(spec, 50.0, 60.0, 0.1)
    t = np.linspace(0.0, 10.0, 777)
    assert np.array_equal(q(t), ref(t + 50.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 1))
def test_shift_composes_exactly(s1, s2, u):
    p = drivers.sample_path(drivers.Periodic(1.0, 0.5, 3.0), -200.0, 200.0, 0.1)
    a = drivers.shift(drivers.shift(p, s1), s2)
    b = drivers.shift(p, s1 + s2)
    t = a.t_start + u * (a.t_end - a.t_start)
    assert a(t) == pytest.approx(b(t), abs=1e-12)


def test_means_constant():
    p = drivers.sample_path(drivers.Constant(0.5), 0.0, 100.0, 1.0)
    assert drivers.least_mean(p) == pytest.approx(0.5, abs=1e-14)
    assert drivers.upper_mean(p) == pytest.approx(0.5, abs=1e-14)


def test_means_periodic():
    p = drivers.sample_path(drivers.Periodic(1.0, 0.5, 2 * math.pi), 0.0, 2000.0, 0.05)
    est = drivers.mean_estimate(p)
    assert abs(est.least - 1.0) < 1e-3 and abs(est.upper - 1.0) < 1e-3
    assert est.ladder == (125.0, 250.0, 500.0, 1000.0)


def test_means_telegraph_ensemble():
    means = []
    for seed in range(32):
        p = drivers.sample_path(drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed), 0.0, 5000.0, 1.0)
        means.append(p.integral(0.0, 5000.0) / 5000.0)
        est = drivers.mean_estimate(p)
        assert est.least <= est.upper
    assert np.mean(means) == pytest.approx(1.0, rel=0.02)


def test_mean_horizon_too_short():
    p = drivers.sample_path(drivers.Constant(1.0), 0.0, 10.0, 1.0)
    with pytest.raises(EstimationError) as exc:
        drivers.mean_estimate(p, r_min=20.0)
    assert exc.value.attained == pytest.approx(5.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.floats(0, 100))
def test_shift_invariance_of_means(seed, s):
    spec = drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed)
    p = drivers.sample_path(spec, 0.0, 600.0, 0.5)
    q = drivers.shift(p, s, window=(0.0, 600.0))
    e1, e2 = drivers.mean_estimate(p), drivers.mean_estimate(q)
    assert e1.least <= e1.upper and e2.least <= e2.upper
    tol = max(e1.least_spread, e2.least_spread) + 0.05
    assert abs(e1.least - e2.least) <= tol


def test_block_constant():
    p = drivers.sample_path(drivers.Constant(1.0), 0.0, 5.0, 5.0)
    b = drivers.block_decomposition(p, 1.0)
    assert np.allclose(b.alphas, 1.0)
    assert b.sup_norm() == 0.0


def test_block_periodic_closed_form():
    T = 2 * math.pi
    p = drivers.sample_path(drivers.Periodic(1.0, 0.5, T), 0.0, 3 * T, 0.001)
    b = drivers.block_decomposition(p, T)
    assert np.allclose(b.alphas, 1.0, atol=1e-7)
    t = np.linspace(0, 3 * T, 1000)
    assert np.max(np.abs(b.A(t) - 0.5 * (1 - np.cos(t % T)))) < 1e-6
    assert b.sup_norm() == pytest.approx(1.0, abs=1e-6)
    assert b.sup_norm() <= 2 * T * 1.0


def test_block_boundaries_and_reconstruction():
    spec = drivers.Telegraph(0.5, 1.5, 1.0, 1.0, seed=2)
    p = drivers.sample_path(spec, 0.0, 40.0, 0.05)
    b = drivers.block_decomposition(p, 10.0)
    assert np.allclose(b.A(np.arange(0, 41, 10.0)), 0.0, atol=1e-12)
    mids = np.array([2.51, 13.37, 25.0, 38.2])
    assert np.allclose(b.alpha_at(mids) + b.dA(mids), p(mids))
    assert b.sup_norm() <= 2 * 10.0 * drivers.upper_mean(p)


def test_partial_block_rejected():
    p = drivers.sample_path(drivers.Constant(1.0), 0.0, 5.5, 0.5)
    with pytest.raises(TruncationError):
        drivers.block_decomposition(p, 1.0)


def test_integral_exact_for_interpolant():
    p = drivers.CoefficientPath.from_function(lambda t: t**2, 0.0, 2.0, 0.5)
    # trapezoid of t^2 on nodes 0, .5, 1, 1.5, 2
    assert p.integral(0.0, 2.0) == pytest.approx(0.5 * (0 + 2 * (0.25 + 1 + 2.25) + 4) * 0.5)
