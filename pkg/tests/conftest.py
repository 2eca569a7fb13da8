import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

from hdspec import angular, bundled  # noqa: E402


@pytest.fixture(scope="session")
def basis0():
    return angular.ProductBasis(0)


@pytest.fixture(scope="session")
def basis1():
    return angular.ProductBasis(1)


@pytest.fixture(scope="session")
def demo_sets():
    return bundled.load_demo_coefficients()


@pytest.fixture(scope="session")
def demo_table(demo_sets):
    return angular.transition_table(demo_sets[(0, 0)], demo_sets[(1, 1)], bundled.TRANSITION_LEVELS)
