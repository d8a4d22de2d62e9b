import logging

import numpy as np
import pytest

from wptlf.model import RectennaParams, SystemDims


@pytest.fixture(autouse=True)
def _quiet_saa_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="wptlf")


@pytest.fixture
def params():
    return RectennaParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def crandn(rng, *shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_instance(rng, M, N, Q=1, T=None, scale=1e-3):
    """Channel(s) at a realistic received-power scale plus a unit-budget precoder."""
    dims = SystemDims(M, N, Q)
    shape = (dims.MN, Q) if T is None else (T, dims.MN, Q)
    H = crandn(rng, *shape, scale=scale)
    s = crandn(rng, dims.MN)
    return dims, H, s
