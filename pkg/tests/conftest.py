import numpy as np
import pytest

from promsb import presets
from promsb.msbm import TruncationPolicy


@pytest.fixture
def policy():
    return TruncationPolicy(1e-6, 1e-3, 10_000)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(presets.MODELS))
def preset_model(request):
    return presets.MODELS[request.param]()
