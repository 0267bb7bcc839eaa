import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import instance, random_powers
from rsfd.config import SystemConfig
from rsfd.distortion import RateCoefficients, covariance_dest_phase1, covariance_dest_phase2, covariance_relay
from rsfd.rates import (
    PowerAllocation,
    RateReport,
    rate_rd,
    rate_sd,
    rate_sr,
    relay_links,
    taylor_bound_rd,
    taylor_bound_sd,
    taylor_bound_sr,
    total_rate,
)

BOUNDS = {"sr": (rate_sr, taylor_bound_sr), "sd": (rate_sd, taylor_bound_sd), "rd": (rate_rd, taylor_bound_rd)}


def _unit_coeffs(K=1, **gains):
    Z = np.zeros((K, K))
    one = np.ones(K)
    fields = dict(
        gamma_sr=Z, gamma_rd=Z, gamma_sd=Z, gbar_sr=Z, gbar_rd=Z, gbar_sd=Z, gtilde_sd=Z,
        alpha_r=one, alpha_d=one, gain_sr=one, gain_sd=one, gain_rd=one,
    )
    fields.update(gains)
    return RateCoefficients(**fields)


def test_unit_snr_gives_one_bit():
    co = _unit_coeffs()
    p = PowerAllocation([1.0], [0.0], [0.0])
    assert rate_sr(co, p, SystemConfig(num_subcarriers=1)) == pytest.approx([1.0])


def test_zero_signal_zero_rate(config, coeffs):
    p = random_powers(np.random.default_rng(0), config)
    zero = np.zeros(4)
    assert not rate_sr(coeffs, PowerAllocation(zero, p.p_sd, p.p_rd), config).any()
    assert not rate_rd(coeffs, PowerAllocation(p.p_sr, p.p_sd, zero), config).any()
    assert not rate_sd(coeffs, PowerAllocation(p.p_sr, zero, p.p_rd), config).any()


def test_pure_links_without_impairments():
    c = SystemConfig().without_impairments()
    _, _, co = instance(c, 0)
    p = random_powers(np.random.default_rng(0), c)
    rd_only = PowerAllocation(np.zeros(4), np.zeros(4), p.p_rd)
    np.testing.assert_allclose(rate_rd(co, rd_only, c), np.log2(1 + co.gain_rd * p.p_rd / c.noise_var_dest))
    sd_only = PowerAllocation(np.zeros(4), p.p_sd, np.zeros(4))
    np.testing.assert_allclose(rate_sd(co, sd_only, c), np.log2(1 + co.gain_sd * p.p_sd / c.noise_var_dest))


def test_min_composition():
    r = RateReport.from_rates([2.0], [1.0], [0.5])
    assert r.r_total == 1.5
    np.testing.assert_array_equal(r.per_subcarrier, [1.5])


def test_zero_powers_zero_total(config, coeffs):
    zero = PowerAllocation(np.zeros(4), np.zeros(4), np.zeros(4))
    assert total_rate(coeffs, zero, config).r_total == 0


def test_total_at_least_direct(config, coeffs):
    p = random_powers(np.random.default_rng(3), config)
    r = total_rate(coeffs, p, config)
    assert r.r_total >= r.r_sd.sum()
    assert r.r_total == pytest.approx(float(np.sum(r.r_sd + np.minimum(r.r_sr, r.r_rd))), abs=1e-12)


def test_prefactor_scales_rates(realization):
    base, scaled = SystemConfig(), SystemConfig(rate_prefactor=0.5)
    from rsfd.distortion import build_coefficients

    co = build_coefficients(*realization, base)
    p = random_powers(np.random.default_rng(4), base)
    assert total_rate(co, p, scaled).r_total == pytest.approx(0.5 * total_rate(co, p, base).r_total)


@pytest.mark.parametrize("seed", range(5))
def test_rates_match_covariance_oracle(seed):
    c = SystemConfig()
    channels, precoders, co = instance(c, seed)
    p = random_powers(np.random.default_rng(seed), c)
    sig_sr = co.gain_sr * p.p_sr
    np.testing.assert_allclose(
        rate_sr(co, p, c), np.log2(1 + sig_sr / covariance_relay(channels, precoders, p, c)), rtol=1e-9
    )
    np.testing.assert_allclose(
        rate_rd(co, p, c),
        np.log2(1 + co.gain_rd * p.p_rd / covariance_dest_phase1(channels, precoders, p, c)),
        rtol=1e-9,
    )
    np.testing.assert_allclose(
        rate_sd(co, p, c),
        np.log2(1 + co.gain_sd * p.p_sd / covariance_dest_phase2(channels, precoders, p, c)),
        rtol=1e-9,
    )


def test_power_allocation_validation():
    with pytest.raises(ValueError):
        PowerAllocation([1.0, -0.1], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        PowerAllocation([1.0], [0.0, 0.0], [0.0])
    p = PowerAllocation.from_stacked(np.arange(6.0))
    np.testing.assert_array_equal(p.p_sd, [2, 3])
    assert PowerAllocation.uniform(SystemConfig()).is_feasible(SystemConfig())


# ---------------------------------------------------------------------------
# concave lower bounds
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("link", sorted(BOUNDS))
def test_bound_tight_at_anchor(config, coeffs, link):
    rate, bound = BOUNDS[link]
    anchor = random_powers(np.random.default_rng(5), config)
    np.testing.assert_allclose(bound(coeffs, anchor, anchor, config), rate(coeffs, anchor, config), rtol=0, atol=1e-10)


@pytest.mark.parametrize("link", sorted(BOUNDS))
def test_bound_below_rate(config, coeffs, link):
    rate, bound = BOUNDS[link]
    rng = np.random.default_rng(6)
    anchor = random_powers(rng, config)
    for _ in range(200):
        p = random_powers(rng, config)
        assert np.all(bound(coeffs, p, anchor, config) <= rate(coeffs, p, config) + 1e-10)


def _fd_jacobian(f, x, h):
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(cols).T


@pytest.mark.parametrize("link", sorted(BOUNDS))
def test_bound_shares_slope(config, coeffs, link):
    model = relay_links(coeffs, config)[link]
    anchor = random_powers(np.random.default_rng(7), config).stacked()
    h = 1e-6 * anchor.max()
    fd_rate = _fd_jacobian(model.rate, anchor, h)
    fd_bound = _fd_jacobian(lambda p: model.bound(p, anchor), anchor, h)
    # relative error of each subcarrier's gradient, measured in norm
    err = np.linalg.norm(fd_bound - fd_rate, axis=1) / np.linalg.norm(fd_rate, axis=1)
    assert np.all(err <= 1e-5)
    exact = model.rate_grad(anchor)
    assert np.all(np.linalg.norm(exact - fd_rate, axis=1) <= 1e-5 * np.linalg.norm(exact, axis=1))
    np.testing.assert_allclose(model.bound_grad(anchor, anchor), exact, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.01, 0.99), link=st.sampled_from(sorted(BOUNDS)))
def test_bound_concave(seed, lam, link):
    c = SystemConfig()
    _, _, co = instance(c, seed % 5)
    rng = np.random.default_rng(seed)
    model = relay_links(co, c)[link]
    anchor, p1, p2 = (random_powers(rng, c).stacked() for _ in range(3))
    mid = model.bound(lam * p1 + (1 - lam) * p2, anchor)
    chord = lam * model.bound(p1, anchor) + (1 - lam) * model.bound(p2, anchor)
    assert np.all(mid >= chord - 1e-10)


def test_bound_rejects_degenerate_anchor():
    co = _unit_coeffs(alpha_r=np.zeros(1), alpha_d=np.zeros(1))
    c = SystemConfig(num_subcarriers=1)
    zero = PowerAllocation([0.0], [0.0], [0.0])
    with pytest.raises(ValueError, match="anchor"):
        taylor_bound_sr(co, zero, zero, c)
