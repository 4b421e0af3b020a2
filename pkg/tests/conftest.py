import numpy as np
import pytest

from lpgrad.counterexample import CounterexampleSpec, build_sigma, remark_surface
from lpgrad.surfaces import FlatSurface


@pytest.fixture(scope="session")
def flat():
    return FlatSurface()


@pytest.fixture(scope="session")
def small_bundle():
    """Counterexample at k_max=3, shared across tests (construction is pure)."""
    return build_sigma(CounterexampleSpec(k_max=3))


@pytest.fixture(scope="session")
def remark4():
    """Integral-bound example surface with four patches."""
    return remark_surface(a=1.75, n_max=4, p=4.0)


def fd_gradient(field, x, y, h=1e-4):
    vxp = field.value(x + h, y)
    vxm = field.value(x - h, y)
    vyp = field.value(x, y + h)
    vym = field.value(x, y - h)
    return (vxp - vxm) / (2 * h), (vyp - vym) / (2 * h)


def fd_gradient4(field, x, y, h=1e-4):
    """Fourth-order central differences, for the tightest tolerance checks."""
    gx = (field.value(x - 2 * h, y) - 8 * field.value(x - h, y)
          + 8 * field.value(x + h, y) - field.value(x + 2 * h, y)) / (12 * h)
    gy = (field.value(x, y - 2 * h) - 8 * field.value(x, y - h)
          + 8 * field.value(x, y + h) - field.value(x, y + 2 * h)) / (12 * h)
    return gx, gy


def fd_laplacian(field, x, y, h=1e-4):
    v0 = field.value(x, y)
    return (field.value(x + h, y) + field.value(x - h, y)
            + field.value(x, y + h) + field.value(x, y - h) - 4 * v0) / h ** 2


def scalar(a):
    return float(np.asarray(a).flat[0])
