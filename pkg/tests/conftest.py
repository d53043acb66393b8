import os

os.environ.setdefault("MPLCONFIGDIR", "/tmp/mplconfig")

import pytest

from spinshuttle.pipeline import warm_propagation_kernel


@pytest.fixture(scope="session", autouse=True)
def _warm_kernel():
    # JIT-compile the propagation kernel once so individual tests measure
    # physics, not compilation.
    warm_propagation_kernel()
