import numpy as np
import pytest

from rdwate import _accel
from rdwate.kernels import KernelSpec


@pytest.fixture(params=list(KernelSpec), ids=lambda k: k.value)
def kernel(request):
    return request.param


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run the test once per numeric backend, restoring the original afterwards."""
    if request.param == "numba" and not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    original = _accel.get_backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(original)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
