import numpy as np
import pytest

from teig.profiles import Profile, ProfileKind


@pytest.fixture(scope="session")
def quarter():
    return Profile.constant(0.25, 1.0, name="quarter")


@pytest.fixture(scope="session")
def four_ninths():
    return Profile.constant(4.0 / 9.0, 1.0, name="four-ninths")


@pytest.fixture(scope="session")
def growing_square():
    # (1+x)^2 on [0,1]: travel time 1.5 > 1
    return Profile.from_coeffs([1.0, 2.0, 1.0], 1.0, name="growing-square")


@pytest.fixture(scope="session")
def zero_potential():
    return Profile.constant(0.0, 1.0, kind=ProfileKind.POTENTIAL, name="free")


def random_slow_cubic(rng, b=1.0):
    """Random single-piece cubic wave speed with travel time below b."""
    while True:
        coeffs = [rng.uniform(0.15, 0.55), rng.uniform(-0.15, 0.15),
                  rng.uniform(-0.08, 0.12), rng.uniform(-0.05, 0.05)]
        try:
            p = Profile.from_coeffs(coeffs, b, name="random-cubic")
        except Exception:
            continue
        vals = p.value(p.audit_grid())
        if np.min(vals) > 0.08 and np.max(vals) < 0.88:
            return p


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
