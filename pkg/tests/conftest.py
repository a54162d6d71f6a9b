import numpy as np
import pytest

from streamlp.reweight import unit_rows


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unit(rng, n, d):
    return unit_rows(rng.standard_normal((n, d)))
