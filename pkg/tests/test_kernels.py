import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlkpp import drivers, kernels
from nlkpp.errors import ConfigurationError, DivergenceError


def test_closed_form_moments():
    g = kernels.KernelSpec.gaussian(1.0)
    assert kernels.moment_L(g, 0.0, 1.0) == pytest.approx(math.exp(0.5), rel=1e-15)
    lap = kernels.KernelSpec.laplace(2.0)
    assert kernels.moment_L(lap, 0.0, 1.0) == pytest.approx(4.0 / 3.0, rel=1e-15)
    tent = kernels.KernelSpec.tent(1.0)
    assert kernels.moment_L(tent, 0.0, 1.0) == pytest.approx(2 * (math.cosh(1) - 1), rel=1e-14)
    assert kernels.unit_moment(tent, 1e-6) == pytest.approx(1.0, abs=1e-12)


def test_mass_and_modulation():
    mod = drivers.Periodic(1.0, 0.5, 2 * math.pi)
    k = kernels.KernelSpec.gaussian(1.0, mass=2.0, modulation=mod)
    assert kernels.total_mass(k, math.pi / 2) == pytest.approx(3.0)
    assert k.mass_bounds() == (1.0, 3.0)
    assert kernels.moment_L(k, math.pi / 2, 1.0) == pytest.approx(3.0 * math.exp(0.5))


def test_modulation_must_be_positive():
    with pytest.raises(ConfigurationError):
        kernels.KernelSpec.gaussian(1.0, modulation=drivers.Periodic(1.0, 1.0, 1.0))


def test_laplace_divergence():
    lap = kernels.KernelSpec.laplace(2.0)
    assert kernels.abscissa(lap) == 2.0
    with pytest.raises(DivergenceError) as exc:
        kernels.moment_L(lap, 0.0, 2.0)
    assert exc.value.mu == 2.0 and exc.value.sigma == 2.0
    assert kernels.abscissa(kernels.KernelSpec.gaussian()) == math.inf


@pytest.mark.parametrize("shape,param", [("gaussian", 0.5), ("gaussian", 2.0), ("laplace", 3.0), ("tent", 1.5)])
def test_density_integrates_to_mass(shape, param):
    from scipy.integrate import quad

    k = kernels.KernelSpec(shape, param, 1.7)
    r = k.truncation_radius
    val, _ = quad(lambda y: float(kernels.kernel_eval(k, 0.0, y)), -r, r, points=[0.0], limit=200)
    assert val == pytest.approx(1.7, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["gaussian", "laplace", "tent"]), st.floats(0.3, 3.0), st.floats(0.01, 5.0))
def test_kernel_even_and_nonnegative(shape, param, y):
    k = kernels.KernelSpec(shape, param)
    a, b = kernels.kernel_eval(k, 0.0, y), kernels.kernel_eval(k, 0.0, -y)
    assert a == b and a >= 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["gaussian", "laplace", "tent"]), st.floats(0.3, 3.0), st.floats(0.01, 0.9), st.floats(0.01, 0.9))
def test_moment_increasing_in_mu(shape, param, f1, f2):
    k = kernels.KernelSpec(shape, param)
    top = min(kernels.abscissa(k), 3.0)
    m1, m2 = sorted((f1 * top, f2 * top))
    if m2 - m1 > 1e-6:
        assert kernels.unit_moment(k, m1) < kernels.unit_moment(k, m2)
    assert kernels.unit_moment(k, m1) > 1.0


def test_quadrature_matches_closed_form():
    g = kernels.KernelSpec.gaussian(1.0)
    q = kernels.moment_quadrature(g, 0.0, 1.0, 0.05, g.truncation_radius)
    assert q == pytest.approx(math.exp(0.5), rel=1e-10)


def test_discretize_mass_exact_and_symmetric():
    for k in (kernels.KernelSpec.gaussian(1.0, 2.0), kernels.KernelSpec.laplace(2.0), kernels.KernelSpec.tent(1.0)):
        d = kernels.discretize(k, 0.05)
        assert d.weights.sum() == pytest.approx(k.mass, rel=1e-14)
        assert np.array_equal(d.weights, d.weights[::-1])
        assert d.radius <= k.truncation_radius
        assert not d.weights.flags.writeable


def test_discrete_moment_close_to_continuous():
    g = kernels.KernelSpec.gaussian(1.0)
    d = kernels.discretize(g, 0.05)
    assert d.moment(0.5) == pytest.approx(kernels.unit_moment(g, 0.5), rel=1e-10)
    lap = kernels.KernelSpec.laplace(2.0)
    dl = kernels.discretize(lap, 0.05)
    # cusp at 0 costs O(h^2) in the trapezoid rule
    assert dl.moment(0.5) == pytest.approx(kernels.unit_moment(lap, 0.5), rel=1e-3)


def test_under_resolved_warns():
    with pytest.warns(RuntimeWarning, match="under-resolved"):
        kernels.discretize(kernels.KernelSpec.gaussian(0.1), 0.05)


def test_invalid_kernels():
    for args in (("cauchy", 1.0), ("gaussian", 0.0), ("laplace", -1.0)):
        with pytest.raises(ConfigurationError):
            kernels.KernelSpec(*args)
    with pytest.raises(ConfigurationError):
        kernels.KernelSpec("gaussian", 1.0, mass=0.0)
