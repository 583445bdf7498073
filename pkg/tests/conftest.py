import math

import numpy as np
import pytest

from convexbilliards import (TrigPoly, build_from_curvature, ellipse,
                             fig2_curve, unit_circle)


@pytest.fixture(scope="session")
def circle():
    return unit_circle()


@pytest.fixture(scope="session")
def ell15():
    return ellipse(1.5, 1.0)


@pytest.fixture(scope="session")
def ell21():
    return ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def ell_sqrt2():
    return ellipse(math.sqrt(2.0), 1.0)


@pytest.fixture(scope="session")
def fig2():
    return fig2_curve()


@pytest.fixture(scope="session")
def asym_curve():
    # no axis of symmetry: nonzero quadratic normal-form coefficients
    return build_from_curvature(TrigPoly(1.0, [0.0, 0.25, 0.07], [0.0, 0.1, 0.0]))


def random_profile_curve(rng, max_harmonic=5, scale=0.25):
    """Random admissible curvature profile (harmonic 1 absent, R > 0)."""
    while True:
        ak = np.zeros(max_harmonic)
        bk = np.zeros(max_harmonic)
        for k in range(2, max_harmonic + 1):
            ak[k - 1] = rng.uniform(-scale, scale) / k
            bk[k - 1] = rng.uniform(-scale, scale) / k
        poly = TrigPoly(1.0, ak, bk)
        if poly.is_positive():
            return build_from_curvature(poly)
