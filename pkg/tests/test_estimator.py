import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rsfd.channel import generate_channels
from rsfd.config import SystemConfig
from rsfd.estimator import PowerAllocator
from rsfd.rates import RateReport


@pytest.fixture
def small():
    config = SystemConfig(num_subcarriers=2, num_bs_antennas=8)
    return config, generate_channels(config, 0), generate_channels(config, 1)


def test_params_round_trip(small):
    config, _, _ = small
    est = PowerAllocator(config=config, scheme="ODL", outer_tol=1e-7)
    params = est.get_params()
    assert params["scheme"] == "ODL" and params["outer_tol"] == 1e-7
    twin = clone(est)
    assert twin.get_params()["scheme"] == "ODL"
    assert twin.set_params(scheme="HD").scheme == "HD"


@pytest.mark.parametrize("scheme", ["RS", "RS_ND", "ODL", "ORL", "HD"])
def test_fit_predict_score(small, scheme):
    config, train, test = small
    est = PowerAllocator(config=config, scheme=scheme).fit(train)
    assert est.allocation_.is_feasible(config)
    assert est.score(train) == pytest.approx(est.report_.r_total, abs=1e-9)
    report = est.predict(test)
    assert isinstance(report, RateReport)
    assert np.isfinite(est.score(test))


def test_requires_fit(small):
    _, train, _ = small
    with pytest.raises(NotFittedError):
        PowerAllocator().predict(train)


def test_input_checks(small):
    config, train, _ = small
    with pytest.raises(TypeError):
        PowerAllocator(config=config).fit(np.zeros((2, 8)))
    with pytest.raises(TypeError):
        PowerAllocator(config={"num_subcarriers": 2}).fit(train)
    with pytest.raises(ValueError):
        PowerAllocator().fit(train)
    with pytest.raises(ValueError):
        PowerAllocator(config=config, scheme="FD").fit(train)
