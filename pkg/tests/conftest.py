import numpy as np
import pytest

from uipt_percolation import logger


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(autouse=True)
def quiet_logger():
    with logger.scoped_configure(format_strs=[]):
        yield
