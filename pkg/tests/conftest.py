import numpy as np
import pytest

from etcsim.certificates import make_certificate
from etcsim.manifold import solve_series
from etcsim.presets import make_example1, make_example2, make_mip


@pytest.fixture(scope="session")
def ex1():
    return make_example1()


@pytest.fixture(scope="session")
def ex2():
    return make_example2()


@pytest.fixture(scope="session")
def mip():
    return make_mip()


@pytest.fixture(scope="session")
def ex1_manifold(ex1):
    return solve_series(ex1, 2)


@pytest.fixture(scope="session")
def ex2_manifold(ex2):
    return solve_series(ex2, 2)


@pytest.fixture(scope="session")
def ex1_cert(ex1):
    # reference constants: P fixed to the identity by the norm-type Lyapunov
    # function, Q left at the identity default
    return make_certificate(ex1.A_K, ex1.B2, ex1.K1,
                            Q=np.array([[1.0]]), P=np.array([[1.0]]),
                            s_f=0.75, s_y=0.5)


@pytest.fixture(scope="session")
def ex2_cert(ex2):
    return make_certificate(ex2.A_K, ex2.B2, ex2.K1, Q=np.eye(2), s_f=0.5)


def random_stable_matrix(rng, n, margin=0.3):
    """Random Hurwitz matrix: negative-definite symmetric part plus skew."""
    m = rng.normal(size=(n, n))
    sym = -(m @ m.T) / n - margin * np.eye(n)
    skew = rng.normal(size=(n, n))
    skew = 0.5 * (skew - skew.T)
    return sym + skew
