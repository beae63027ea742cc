import pytest

from nlkpp import drivers, kernels, waves

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def gaussian():
    return kernels.KernelSpec.gaussian(1.0)


@pytest.fixture(scope="session")
def laplace():
    return kernels.KernelSpec.laplace(2.0)


@pytest.fixture(scope="session")
def gaussian_wave(gaussian):
    """Gaussian, a = 1 front at mu = 0.5, path long enough for a 60-unit stability run."""
    return waves.build_wave(gaussian, drivers.Constant(1.0), 0.5, reach=60.0)


@pytest.fixture(scope="session")
def laplace_wave(laplace):
    return waves.build_wave(laplace, drivers.Constant(1.0), 0.5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
