import numpy as np
import pytest

import soaa
from soaa import backend


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile/load every available kernel backend before timed sections."""
    for name in soaa.available_backends():
        backend.set_backend(name)
        opt = soaa.SOAA(np.zeros(3), total_steps=10)
        opt.step(np.ones(3), loss=1.0)
        adam = soaa.Adam(np.zeros(3))
        adam.step(np.ones(3))
        adamw = soaa.Adam(np.zeros(3), weight_decay=0.01, decoupled=True)
        adamw.step(np.ones(3))
    backend.set_backend("auto")


@pytest.fixture
def auto_backend():
    """Restore the default backend after a test that switches it."""
    yield
    backend.set_backend("auto")
