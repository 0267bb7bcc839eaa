"""Interference-plus-noise bookkeeping for the full-duplex relay link.

Two independent routes to the same quantity:

* :func:`build_coefficients` produces power-free multipliers so that the
  interference seen on subcarrier ``k`` is ``alpha[k] + sum_m gamma[k, m] p[m]``
  for each power block. The rates and the solver only use this form.
* :func:`covariance_relay`, :func:`covariance_dest_phase1` and
  :func:`covariance_dest_phase2` evaluate the collective covariances term by
  term from channels, precoders and powers, with explicit ``Theta`` matrices,
  ``diag`` operators and traces. They exist to cross-check the first route.

Products of two distortion coefficients are dropped in both routes.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RateCoefficients",
    "build_coefficients",
    "covariance_relay",
    "covariance_dest_phase1",
    "covariance_dest_phase2",
]


@dataclass(frozen=True, eq=False)
class RateCoefficients:
    """Leakage multipliers (K x K), noise floors and signal gains (length K).

    ``gamma_*`` feed the relay-side interference, ``gbar_*`` the destination
    in its first decoding phase, ``gtilde_sd`` the destination after the relay
    stream has been cancelled.
    """

    gamma_sr: np.ndarray
    gamma_rd: np.ndarray
    gamma_sd: np.ndarray
    gbar_sr: np.ndarray
    gbar_rd: np.ndarray
    gbar_sd: np.ndarray
    gtilde_sd: np.ndarray
    alpha_r: np.ndarray
    alpha_d: np.ndarray
    gain_sr: np.ndarray
    gain_sd: np.ndarray
    gain_rd: np.ndarray

    @property
    def num_subcarriers(self):
        return self.alpha_r.shape[0]

    def replace(self, **changes):
        fields = {name: getattr(self, name) for name in self.__dataclass_fields__}
        fields.update(changes)
        return RateCoefficients(**fields)


def _abs2(x):
    return x.real**2 + x.imag**2


def build_coefficients(channels, precoders, config) -> RateCoefficients:
    """Coefficient form of the relay and destination interference."""
    channels.check_matches(config)
    K = config.num_subcarriers
    eye = np.eye(K)

    H_sr, H_sd = channels.h_hat_sr, channels.h_hat_sd
    V_sr, V_sd = precoders.v_sr, precoders.v_sd
    if V_sr.shape != H_sr.shape or V_sd.shape != H_sd.shape:
        raise ValueError("precoder and channel dimensions differ")
    e_sr = channels.err_vars["sr"]
    e_sd = channels.err_vars["sd"]
    e_rd = channels.err_vars["rd"]
    e_rr = channels.err_vars["rr"]
    theta = config.theta
    kappa_r, beta_r, beta_d = config.kappa_r, config.beta_r, config.beta_d

    # co-channel gains |h^m v^m|^2, same subcarrier
    g_sr_vsr = _abs2(np.einsum("kn,kn->k", H_sr, V_sr))
    g_sr_vsd = _abs2(np.einsum("kn,kn->k", H_sr, V_sd))
    g_sd_vsr = _abs2(np.einsum("kn,kn->k", H_sd, V_sr))
    g_sd_vsd = _abs2(np.einsum("kn,kn->k", H_sd, V_sd))
    g_rd = _abs2(channels.h_hat_rd)
    g_rr = _abs2(channels.h_hat_rr)

    # source transmit distortion: h^k Theta diag(v^m v^mH) h^kH, and its trace
    def leak(H, V):
        return (_abs2(H) * theta) @ _abs2(V).T

    def trace(V):
        return _abs2(V) @ theta

    gamma_sr = (
        eye * e_sr
        + leak(H_sr, V_sr)
        + np.outer(e_sr, trace(V_sr))
        + beta_r * (g_sr_vsr + e_sr)[None, :]
    )
    gamma_sd = (
        eye * (g_sr_vsd + e_sr)
        + leak(H_sr, V_sd)
        + np.outer(e_sr, trace(V_sd))
        + beta_r * (g_sr_vsd + e_sr)[None, :]
    )
    gamma_rd = (
        eye * e_rr
        + kappa_r * (g_rr + e_rr)[:, None]
        + beta_r * (g_rr + e_rr)[None, :]
    )
    gbar_sr = (
        eye * (g_sd_vsr + e_sd)
        + leak(H_sd, V_sr)
        + np.outer(e_sd, trace(V_sr))
        + beta_d * (g_sd_vsr + e_sd)[None, :]
    )
    gbar_sd = (
        eye * (g_sd_vsd + e_sd)
        + leak(H_sd, V_sd)
        + np.outer(e_sd, trace(V_sd))
        + beta_d * (g_sd_vsd + e_sd)[None, :]
    )
    gbar_rd = (
        eye * e_rd
        + kappa_r * (g_rd + e_rd)[:, None]
        + beta_d * (g_rd + e_rd)[None, :]
    )
    gtilde_sd = gbar_sd - eye * g_sd_vsd
    # the subtraction cancels an identical term; clip rounding residue
    gtilde_sd = np.maximum(gtilde_sd, 0.0)

    n_r, n_d = config.noise_var_relay, config.noise_var_dest
    alpha_r = n_r + beta_r * n_r.sum()
    alpha_d = n_d + beta_d * n_d.sum()

    return RateCoefficients(
        gamma_sr=gamma_sr,
        gamma_rd=gamma_rd,
        gamma_sd=gamma_sd,
        gbar_sr=gbar_sr,
        gbar_rd=gbar_rd,
        gbar_sd=gbar_sd,
        gtilde_sd=gtilde_sd,
        alpha_r=alpha_r,
        alpha_d=alpha_d,
        gain_sr=g_sr_vsr,
        gain_sd=g_sd_vsd,
        gain_rd=g_rd,
    )


# ---------------------------------------------------------------------------
# literal covariance evaluation
# ---------------------------------------------------------------------------


def _quad(h, A):
    """h A h^H for a row vector h."""
    return float(np.real(h @ A @ h.conj()))


def _covariance_destination(channels, precoders, powers, config):
    K = config.num_subcarriers
    p_sr, p_sd, p_rd = powers.p_sr, powers.p_sd, powers.p_rd
    H_sd = channels.h_hat_sd
    h_rd = channels.h_hat_rd
    e_sd = channels.err_vars["sd"]
    e_rd = channels.err_vars["rd"]
    n_d = config.noise_var_dest
    Theta = np.diag(config.theta)
    kappa_r, beta_d = config.kappa_r, config.beta_d

    tx_sr = [np.outer(v, v.conj()) * p for v, p in zip(precoders.v_sr, p_sr)]
    tx_sd = [np.outer(v, v.conj()) * p for v, p in zip(precoders.v_sd, p_sd)]
    distortion_source = Theta @ sum(np.diag(np.diag(a)) + np.diag(np.diag(b)) for a, b in zip(tx_sr, tx_sd))
    total_rd = p_rd.sum()

    receive_distortion = 0.0
    for m in range(K):
        receive_distortion += (
            _quad(H_sd[m], tx_sr[m])
            + _quad(H_sd[m], tx_sd[m])
            + e_sd[m] * np.real(np.trace(tx_sr[m] + tx_sd[m]))
            + np.real(h_rd[m] * p_rd[m] * np.conj(h_rd[m]))
            + e_rd[m] * p_rd[m]
            + n_d[m]
        )

    out = np.empty(K)
    for k in range(K):
        out[k] = (
            _quad(H_sd[k], tx_sr[k] + tx_sd[k])
            + e_sd[k] * np.real(np.trace(tx_sr[k] + tx_sd[k]))
            + np.real(h_rd[k] * kappa_r * total_rd * np.conj(h_rd[k]))
            + e_rd[k] * (kappa_r * total_rd + p_rd[k])
            + _quad(H_sd[k], distortion_source)
            + e_sd[k] * np.real(np.trace(distortion_source))
            + beta_d * receive_distortion
            + n_d[k]
        )
    return out


def covariance_relay(channels, precoders, powers, config):
    """Interference-plus-noise power at the relay after self-interference cancellation."""
    K = config.num_subcarriers
    p_sr, p_sd, p_rd = powers.p_sr, powers.p_sd, powers.p_rd
    H_sr = channels.h_hat_sr
    h_rr = channels.h_hat_rr
    e_sr = channels.err_vars["sr"]
    e_rr = channels.err_vars["rr"]
    n_r = config.noise_var_relay
    Theta = np.diag(config.theta)
    kappa_r, beta_r = config.kappa_r, config.beta_r

    tx_sr = [np.outer(v, v.conj()) * p for v, p in zip(precoders.v_sr, p_sr)]
    tx_sd = [np.outer(v, v.conj()) * p for v, p in zip(precoders.v_sd, p_sd)]
    distortion_source = Theta @ sum(np.diag(np.diag(a)) + np.diag(np.diag(b)) for a, b in zip(tx_sr, tx_sd))
    total_rd = p_rd.sum()

    receive_distortion = 0.0
    for m in range(K):
        receive_distortion += (
            _quad(H_sr[m], tx_sr[m])
            + _quad(H_sr[m], tx_sd[m])
            + e_sr[m] * np.real(np.trace(tx_sr[m] + tx_sd[m]))
            + np.real(h_rr[m] * p_rd[m] * np.conj(h_rr[m]))
            + e_rr[m] * p_rd[m]
            + n_r[m]
        )

    out = np.empty(K)
    for k in range(K):
        out[k] = (
            _quad(H_sr[k], tx_sd[k])
            + e_sr[k] * (p_sd[k] + p_sr[k])
            + np.real(h_rr[k] * kappa_r * total_rd * np.conj(h_rr[k]))
            + e_rr[k] * (kappa_r * total_rd + p_rd[k])
            + _quad(H_sr[k], distortion_source)
            + e_sr[k] * np.real(np.trace(distortion_source))
            + beta_r * receive_distortion
            + n_r[k]
        )
    return out


def covariance_dest_phase1(channels, precoders, powers, config):
    """Destination interference while decoding the relay stream (direct link is interference)."""
    return _covariance_destination(channels, precoders, powers, config)


def covariance_dest_phase2(channels, precoders, powers, config):
    """Destination interference after the relay stream has been cancelled."""
    phase1 = _covariance_destination(channels, precoders, powers, config)
    direct = np.array(
        [
            _quad(h, np.outer(v, v.conj()) * p)
            for h, v, p in zip(channels.h_hat_sd, precoders.v_sd, powers.p_sd)
        ]
    )
    out = phase1 - direct
    if np.any(out < -1e-12 * np.maximum(phase1, 1.0)):
        raise ArithmeticError("phase-2 covariance became negative; inputs are inconsistent")
    return np.maximum(out, 0.0)
