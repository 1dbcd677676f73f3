import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from soro_spt.model import default_config

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def arm(cfg):
    return cfg.model


@pytest.fixture(scope="session", params=[1, 2, 4])
def arm_n(request, arm):
    return arm.with_sections(request.param)


def random_state(m, rng, spread=0.3, rate=1.0):
    return m.rest_q + spread * rng.standard_normal(m.dof), rate * rng.standard_normal(m.dof)


def rk4_exp(xi, s, steps=400):
    """Integrate dg/dt = g hat(xi) from the identity; independent of the closed form."""
    from soro_spt.screw import hat
    X = hat(xi)
    g = np.eye(4)
    h = s / steps
    for _ in range(steps):
        k1 = g @ X
        k2 = (g + 0.5 * h * k1) @ X
        k3 = (g + 0.5 * h * k2) @ X
        k4 = (g + h * k3) @ X
        g = g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return g


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
