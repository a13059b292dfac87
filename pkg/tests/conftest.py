import pytest

from hypdrift import groups, walk


@pytest.fixture(scope="session")
def f2():
    return groups.free_group(2)


@pytest.fixture(scope="session")
def f2_uniform(f2):
    return walk.make_measure(f2, [(c, 1.0) for c in "aAbB"])


@pytest.fixture(scope="session")
def f3():
    return groups.free_group(3)


@pytest.fixture(scope="session")
def f3_uniform(f3):
    return walk.make_measure(f3, [(c, 1.0) for c in "aAbBcC"])


@pytest.fixture(scope="session")
def modular():
    return groups.modular_group()


@pytest.fixture(scope="session")
def modular_uniform(modular):
    return walk.make_measure(modular, [(c, 1.0) for c in "sStT"])


@pytest.fixture(scope="session")
def schottky():
    return groups.schottky_group()


@pytest.fixture(scope="session")
def schottky_uniform(schottky):
    return walk.make_measure(schottky, [(c, 1.0) for c in "aAbB"])


@pytest.fixture(scope="session")
def f2_ball12(f2):
    return groups.orbit_ball(f2, 12)


@pytest.fixture(scope="session")
def modular_ball12(modular):
    return groups.orbit_ball(modular, 12)
