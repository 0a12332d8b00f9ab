"""Session-scoped fixtures for the expensive pipeline objects.

The searches and spectra are deterministic, so sharing them across test
files changes nothing about what is tested and keeps the suite inside
its runtime budget.
"""

import pytest

import swym


@pytest.fixture(scope="session")
def profile_n1():
    return swym.find_a_n(1)


@pytest.fixture(scope="session")
def profile_n2():
    return swym.find_a_n(2)


@pytest.fixture(scope="session")
def profile_n3():
    return swym.find_a_n(3)


@pytest.fixture(scope="session")
def potential_n1(profile_n1):
    return swym.build_potential(profile_n1)


@pytest.fixture(scope="session")
def fd_n1(potential_n1):
    return swym.eigen_fd(potential_n1, k=2)


@pytest.fixture(scope="session")
def shooting_n1(potential_n1):
    return swym.eigen_shooting(potential_n1, k=2)


@pytest.fixture(scope="session")
def background_n1(profile_n1):
    return swym.profile_background(profile_n1)


@pytest.fixture(scope="session")
def solution_file_n1(tmp_path_factory, profile_n1):
    path = tmp_path_factory.mktemp("artifacts") / "solution_n1.json"
    swym.write_solution(path, profile_n1)
    return path
