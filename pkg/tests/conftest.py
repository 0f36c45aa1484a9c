import hypothesis
import pytest

from stochgames import fixtures

hypothesis.settings.register_profile("ci", deadline=None, max_examples=60)
hypothesis.settings.load_profile("ci")


@pytest.fixture(scope="session")
def fig1():
    return fixtures.fig1()


@pytest.fixture(scope="session")
def fig2():
    return fixtures.fig2()


@pytest.fixture(scope="session")
def fig3():
    return fixtures.fig3()
