import dataclasses

import numpy as np
import pytest

from conftest import instance
from rsfd.benchmarks import (
    SchemeId,
    hd_coefficients,
    solve_hd,
    solve_odl,
    solve_orl,
    solve_realization,
    solve_scheme,
)
from rsfd.config import SystemConfig
from rsfd.distortion import RateCoefficients
from rsfd.oracles import water_filling


def _coeffs(K, gain_sr, gain_sd, gain_rd, noise=1.0):
    Z = np.zeros((K, K))
    vec = lambda x: np.full(K, float(x))  # noqa: E731
    return RateCoefficients(
        gamma_sr=Z, gamma_rd=Z, gamma_sd=Z, gbar_sr=Z, gbar_rd=Z, gbar_sd=Z, gtilde_sd=Z,
        alpha_r=vec(noise), alpha_d=vec(noise),
        gain_sr=vec(gain_sr), gain_sd=vec(gain_sd), gain_rd=vec(gain_rd),
    )


def test_scheme_tokens():
    assert [s.value for s in SchemeId] == ["RS", "RS_ND", "ODL", "ORL", "HD"]
    assert str(SchemeId.RS_ND) == "RS_ND"
    assert SchemeId("HD") is SchemeId.HD


@pytest.mark.parametrize("seed", range(3))
def test_odl_is_water_filling(seed):
    c = SystemConfig().without_impairments()
    _, _, co = instance(c, seed)
    allocation, report = solve_odl(co, c)
    expected = water_filling(co.gain_sd / co.alpha_d, c.power_source)
    np.testing.assert_allclose(allocation.p_sd, expected, atol=1e-6)
    assert not allocation.p_sr.any() and not allocation.p_rd.any()
    assert report.r_total == pytest.approx(report.r_sd.sum())


def test_broken_links_give_zero():
    c = SystemConfig(num_subcarriers=2)
    assert solve_odl(_coeffs(2, 1.0, 0.0, 1.0), c)[1].r_total == pytest.approx(0.0, abs=1e-9)
    assert solve_orl(_coeffs(2, 0.0, 1.0, 1.0), c)[1].r_total == pytest.approx(0.0, abs=1e-9)
    assert solve_orl(_coeffs(2, 1.0, 1.0, 0.0), c)[1].r_total == pytest.approx(0.0, abs=1e-9)


def test_orl_single_subcarrier_closed_form():
    c = SystemConfig(num_subcarriers=1, power_source=1.0, power_relay=3.0)
    allocation, report = solve_orl(_coeffs(1, 2.0, 5.0, 1.0), c)
    assert report.r_total == pytest.approx(min(np.log2(1 + 2.0), np.log2(1 + 3.0)), abs=1e-6)
    assert not allocation.p_sd.any()


def test_hd_is_half_of_orl_without_direct_link():
    c = SystemConfig(num_subcarriers=3)
    co = _coeffs(3, 2.0, 0.0, 0.5)
    hd = solve_hd(co, c)[1].r_total
    orl = solve_orl(co, c)[1].r_total
    assert hd == pytest.approx(0.5 * orl, abs=1e-6)


def test_zero_budgets_give_zero(coeffs):
    c = SystemConfig(power_source=0.0, power_relay=0.0)
    for solve in (solve_odl, solve_orl, solve_hd):
        assert solve(coeffs, c)[1].r_total == 0.0


def test_hd_ignores_self_interference(config, realization):
    channels, precoders = realization
    loud = dataclasses.replace(config, strength_si=1e3, kappa_relay=0.5)
    a = solve_hd(hd_coefficients(channels, precoders, config), config)[1].r_total
    b = solve_hd(hd_coefficients(channels, precoders, loud), loud)[1].r_total
    assert a == b


def test_hd_can_beat_rs_under_strong_self_interference():
    c = SystemConfig(strength_si=1e3, kappa_relay=0.5, theta_tx_source=1e-3)
    channels, precoders, _ = instance(c, 0)
    out = solve_realization(channels, precoders, c, ["RS", "HD"])
    assert out[SchemeId.HD][1].r_total > out[SchemeId.RS][1].r_total


@pytest.mark.parametrize("seed", range(6))
def test_containment(seed):
    c = SystemConfig()
    channels, precoders, _ = instance(c, seed)
    out = solve_realization(channels, precoders, c, ["RS", "RS_ND", "ODL", "ORL"])
    rs = out[SchemeId.RS][1].r_total
    for scheme in ("RS_ND", "ODL", "ORL"):
        assert out[SchemeId(scheme)][1].r_total <= rs + 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_rs_nd_matches_rs_without_distortion(seed):
    c = SystemConfig().without_distortion()
    channels, precoders, _ = instance(c, seed)
    out = solve_realization(channels, precoders, c, ["RS", "RS_ND"])
    assert out[SchemeId.RS_ND][1].r_total == pytest.approx(out[SchemeId.RS][1].r_total, abs=1e-6)


def test_distortion_unaware_design_loses_under_heavy_distortion():
    c = SystemConfig(kappa_relay=0.1, beta_relay=0.1, beta_dest=0.1, theta_tx_source=0.1)
    gaps = []
    for seed in range(5):
        channels, precoders, _ = instance(c, seed)
        out = solve_realization(channels, precoders, c, ["RS", "RS_ND"])
        gaps.append(out[SchemeId.RS][1].r_total - out[SchemeId.RS_ND][1].r_total)
    assert min(gaps) >= -1e-6
    assert np.mean(gaps) > 0


def test_solve_scheme_and_iterations(config, realization):
    counts = {}
    out = solve_realization(*realization, config, ["ODL", "HD"], iterations=counts)
    assert set(out) == set(counts) == {SchemeId.ODL, SchemeId.HD}
    assert all(n >= 1 for n in counts.values())
    single = solve_scheme("ODL", *realization, config)
    assert single[1].r_total == out[SchemeId.ODL][1].r_total
    with pytest.raises(ValueError):
        solve_scheme("FD", *realization, config)
