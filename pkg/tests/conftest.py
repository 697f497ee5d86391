import os
import sys

import numpy as np
import pytest

# Ensure repository root is in sys.path
root_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if root_dir not in sys.path:
    sys.path.insert(0, root_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def s2_rule():
    from bp_sphere import sphere_quadrature
    return sphere_quadrature(3, "deterministic", 16)


@pytest.fixture
def s3_rule():
    from bp_sphere import sphere_quadrature
    return sphere_quadrature(4, "deterministic", 16)
