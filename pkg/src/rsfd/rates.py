"""Achievable rates of the three links and their concave lower bounds.

Every link rate has the shape

    R^k = c * log2(1 + (S p)_k / (alpha_k + (G p)_k))

where ``p = [p_sr, p_sd, p_rd]`` stacks the three power vectors, ``S`` picks
the desired signal and ``G`` collects every leakage multiplier. Writing the
rate as ``log(alpha + (G + S) p) - log(alpha + G p)`` exposes a difference of
concave functions; replacing the subtracted term by its tangent at an anchor
gives a concave global lower bound that touches the rate at the anchor with
the same gradient.
"""

from dataclasses import dataclass

import numpy as np

from .validation import check_powers

__all__ = [
    "PowerAllocation",
    "RateReport",
    "LinkModel",
    "relay_links",
    "rate_sr",
    "rate_rd",
    "rate_sd",
    "total_rate",
    "taylor_bound_sr",
    "taylor_bound_sd",
    "taylor_bound_rd",
]

LN2 = np.log(2.0)


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-subcarrier powers in watts and the per-subcarrier relay-path rate ``t``."""

    p_sr: np.ndarray
    p_sd: np.ndarray
    p_rd: np.ndarray
    t: np.ndarray = None

    def __post_init__(self):
        K = np.asarray(self.p_sr).shape[0] if np.ndim(self.p_sr) else 0
        for name in ("p_sr", "p_sd", "p_rd"):
            arr = check_powers(getattr(self, name), K, name).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        t = np.zeros(K) if self.t is None else np.array(self.t, dtype=float)
        if t.shape != (K,):
            raise ValueError(f"t must have shape ({K},)")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def num_subcarriers(self):
        return self.p_sr.shape[0]

    def stacked(self):
        return np.concatenate([self.p_sr, self.p_sd, self.p_rd])

    @classmethod
    def from_stacked(cls, p, t=None):
        p = np.asarray(p, dtype=float)
        K = p.shape[0] // 3
        return cls(p[:K], p[K : 2 * K], p[2 * K :], t)

    @classmethod
    def uniform(cls, config):
        """Equal split: each source stream gets ``P_s / (2K)``, the relay ``P_r / K``."""
        K = config.num_subcarriers
        return cls(
            np.full(K, config.power_source / (2 * K)),
            np.full(K, config.power_source / (2 * K)),
            np.full(K, config.power_relay / K),
        )

    def is_feasible(self, config, tol=1e-9):
        return bool(
            self.p_rd.sum() <= config.power_relay + tol
            and (self.p_sr + self.p_sd).sum() <= config.power_source + tol
        )


@dataclass(frozen=True, eq=False)
class RateReport:
    """Per-subcarrier link rates (bits/s/Hz) and the system total."""

    r_sr: np.ndarray
    r_rd: np.ndarray
    r_sd: np.ndarray
    r_total: float

    @classmethod
    def from_rates(cls, r_sr, r_rd, r_sd):
        r_sr, r_rd, r_sd = (np.asarray(r, dtype=float) for r in (r_sr, r_rd, r_sd))
        return cls(r_sr, r_rd, r_sd, float(np.sum(r_sd + np.minimum(r_sr, r_rd))))

    @property
    def per_subcarrier(self):
        return self.r_sd + np.minimum(self.r_sr, self.r_rd)


@dataclass(frozen=True, eq=False)
class LinkModel:
    """One link's rate as a function of the stacked power vector."""

    signal: np.ndarray
    interference: np.ndarray
    floor: np.ndarray
    prelog: float = 1.0

    @property
    def total(self):
        return self.signal + self.interference

    def rate(self, p):
        denom = self.floor + self.interference @ p
        if np.any(denom <= 0):
            raise ValueError("interference-plus-noise must be positive")
        return self.prelog * np.log1p((self.signal @ p) / denom) / LN2

    def rate_grad(self, p):
        u = self.floor + self.total @ p
        v = self.floor + self.interference @ p
        return (self.prelog / LN2) * (self.total / u[:, None] - self.interference / v[:, None])

    def _anchor_denominator(self, anchor):
        v0 = self.floor + self.interference @ anchor
        if np.any(v0 <= 0):
            raise ValueError("anchor has a zero interference-plus-noise denominator")
        return v0

    def bound(self, p, anchor):
        """Concave lower bound of :meth:`rate`, tight at ``anchor``."""
        v0 = self._anchor_denominator(anchor)
        u = self.floor + self.total @ p
        lin = (self.interference @ (p - anchor)) / v0
        return (self.prelog / LN2) * (np.log(u) - np.log(v0) - lin)

    def bound_grad(self, p, anchor):
        v0 = self._anchor_denominator(anchor)
        u = self.floor + self.total @ p
        return (self.prelog / LN2) * (self.total / u[:, None] - self.interference / v0[:, None])

    def bound_curvature(self, p):
        """Rows ``a_k`` and weights ``w_k`` with Hessian of bound ``k`` = ``-w_k a_k a_k^T``."""
        u = self.floor + self.total @ p
        return self.total, (self.prelog / LN2) / u**2

    def scaled(self, factor):
        return LinkModel(self.signal, self.interference, self.floor, self.prelog * factor)


def relay_links(coeffs, config):
    """Link models for the full-duplex system: ``{"sr", "rd", "sd"}``."""
    K = coeffs.num_subcarriers
    Z = np.zeros((K, K))
    c = config.rate_prefactor

    def diag(g):
        return np.diag(np.asarray(g, dtype=float))

    sr = LinkModel(
        np.hstack([diag(coeffs.gain_sr), Z, Z]),
        np.hstack([coeffs.gamma_sr, coeffs.gamma_sd, coeffs.gamma_rd]),
        coeffs.alpha_r,
        c,
    )
    rd = LinkModel(
        np.hstack([Z, Z, diag(coeffs.gain_rd)]),
        np.hstack([coeffs.gbar_sr, coeffs.gbar_sd, coeffs.gbar_rd]),
        coeffs.alpha_d,
        c,
    )
    sd = LinkModel(
        np.hstack([Z, diag(coeffs.gain_sd), Z]),
        np.hstack([coeffs.gbar_sr, coeffs.gtilde_sd, coeffs.gbar_rd]),
        coeffs.alpha_d,
        c,
    )
    return {"sr": sr, "rd": rd, "sd": sd}


def _stack(powers):
    return powers.stacked()


def rate_sr(coeffs, powers, config):
    return relay_links(coeffs, config)["sr"].rate(_stack(powers))


def rate_rd(coeffs, powers, config):
    return relay_links(coeffs, config)["rd"].rate(_stack(powers))


def rate_sd(coeffs, powers, config):
    return relay_links(coeffs, config)["sd"].rate(_stack(powers))


def total_rate(coeffs, powers, config) -> RateReport:
    links = relay_links(coeffs, config)
    p = _stack(powers)
    return RateReport.from_rates(links["sr"].rate(p), links["rd"].rate(p), links["sd"].rate(p))


def taylor_bound_sr(coeffs, powers, anchor, config):
    return relay_links(coeffs, config)["sr"].bound(_stack(powers), _stack(anchor))


def taylor_bound_sd(coeffs, powers, anchor, config):
    return relay_links(coeffs, config)["sd"].bound(_stack(powers), _stack(anchor))


def taylor_bound_rd(coeffs, powers, anchor, config):
    return relay_links(coeffs, config)["rd"].bound(_stack(powers), _stack(anchor))
