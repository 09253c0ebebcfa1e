import pytest

from charvol.continuation import DeformationProblem, FillingCoefficients, solve_filling
from charvol.eigenvar import build_extended
from charvol.fixtures import load_fixture
from charvol.repvar import GaugedSystem, find_complete


@pytest.fixture(scope="session")
def fig8_spec():
    return load_fixture("fig8")


@pytest.fixture(scope="session")
def wlink_spec():
    return load_fixture("wlink")


@pytest.fixture(scope="session")
def abelian_spec():
    return load_fixture("abelian")


@pytest.fixture(scope="session")
def nonhyp_spec():
    return load_fixture("nonhyp")


@pytest.fixture(scope="session")
def fig8_system(fig8_spec):
    return GaugedSystem(fig8_spec)


@pytest.fixture(scope="session")
def wlink_system(wlink_spec):
    return GaugedSystem(wlink_spec)


@pytest.fixture(scope="session")
def fig8_complete(fig8_spec, fig8_system):
    return find_complete(fig8_spec, fig8_system)


@pytest.fixture(scope="session")
def wlink_complete(wlink_spec, wlink_system):
    return find_complete(wlink_spec, wlink_system)


@pytest.fixture(scope="session")
def fig8_problem(fig8_system, fig8_complete):
    return DeformationProblem(fig8_system, fig8_complete)


@pytest.fixture(scope="session")
def wlink_problem(wlink_system, wlink_complete):
    return DeformationProblem(wlink_system, wlink_complete)


@pytest.fixture(scope="session")
def fig8_extended(fig8_system):
    return build_extended(fig8_system)


@pytest.fixture(scope="session")
def fig8_fillings(fig8_spec, fig8_problem, fig8_complete):
    """(kappa text, point, path) for q = 5, 7, 11, computed once."""
    out = []
    for q in (5, 7, 11):
        kappa = FillingCoefficients.parse(f"1,{q}", fig8_spec.cusp_count)
        pt, path = solve_filling(fig8_problem, fig8_complete, kappa)
        out.append((f"1,{q}", pt, path))
    return out


@pytest.fixture(scope="session")
def wlink_fillings(wlink_spec, wlink_problem, wlink_complete):
    out = []
    for ktext in ("1,5;1,7", "1,7;1,5", "1,5;inf"):
        kappa = FillingCoefficients.parse(ktext, wlink_spec.cusp_count)
        pt, path = solve_filling(wlink_problem, wlink_complete, kappa)
        out.append((ktext, pt, path))
    return out
