import mpmath
import pytest


@pytest.fixture(autouse=True)
def _default_precision():
    """Pin 128-bit working precision per test; restore afterwards."""
    old = mpmath.mp.prec
    mpmath.mp.prec = 128
    yield
    mpmath.mp.prec = old
