import numpy as np
import pytest

from emsa import accel


def pytest_report_header(config):
    return f"emsa kernel backend: {accel.backend_name()}"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def backend_modules():
    """All importable kernel backends as (name, module) pairs."""
    from emsa import _kernels_numpy

    mods = [("numpy", _kernels_numpy)]
    if accel.HAVE_NUMBA:
        from emsa import _kernels_numba

        mods.append(("numba", _kernels_numba))
    return mods
