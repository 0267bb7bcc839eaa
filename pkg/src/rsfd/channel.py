"""Random channel realizations under imperfect CSI and MRT precoding.

Only the estimated channels are materialized. Every rate and covariance
expression downstream consumes the estimate together with the error
variance, so the true channel never has to be drawn.
"""

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .validation import ConfigError

__all__ = [
    "RNG_ALGORITHM",
    "ChannelRealization",
    "Precoders",
    "generate_channels",
    "mrt_precoders",
]

#: Bit generator used for every realization (seeded through ``SeedSequence``).
RNG_ALGORITHM = "PCG64"

_LINKS = ("sr", "sd", "rd", "rr")


def _frozen(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Estimated channels for every subcarrier.

    ``h_hat_sr`` and ``h_hat_sd`` have shape ``(K, N_BS)`` (row ``k`` is the
    1 x N_BS channel of subcarrier ``k``); ``h_hat_rd`` and ``h_hat_rr`` have
    shape ``(K,)``. ``err_vars`` maps each link name to its length-K error
    variances.
    """

    h_hat_sr: np.ndarray
    h_hat_sd: np.ndarray
    h_hat_rd: np.ndarray
    h_hat_rr: np.ndarray
    err_vars: dict

    def __post_init__(self):
        sr = np.asarray(self.h_hat_sr, dtype=complex)
        sd = np.asarray(self.h_hat_sd, dtype=complex)
        if sr.ndim != 2 or sd.shape != sr.shape:
            raise ValueError("h_hat_sr and h_hat_sd must share shape (K, N_BS)")
        K = sr.shape[0]
        rd = np.asarray(self.h_hat_rd, dtype=complex)
        rr = np.asarray(self.h_hat_rr, dtype=complex)
        if rd.shape != (K,) or rr.shape != (K,):
            raise ValueError("h_hat_rd and h_hat_rr must have shape (K,)")
        err = {}
        for link in _LINKS:
            var = np.asarray(self.err_vars[link], dtype=float)
            if var.shape != (K,) or np.any(var < 0):
                raise ValueError(f"err_vars[{link!r}] must be nonnegative with shape ({K},)")
            err[link] = _frozen(var)
        object.__setattr__(self, "h_hat_sr", _frozen(sr))
        object.__setattr__(self, "h_hat_sd", _frozen(sd))
        object.__setattr__(self, "h_hat_rd", _frozen(rd))
        object.__setattr__(self, "h_hat_rr", _frozen(rr))
        object.__setattr__(self, "err_vars", err)

    @property
    def num_subcarriers(self):
        return self.h_hat_sr.shape[0]

    @property
    def num_bs_antennas(self):
        return self.h_hat_sr.shape[1]

    def check_matches(self, config):
        if (self.num_subcarriers, self.num_bs_antennas) != (
            config.num_subcarriers,
            config.num_bs_antennas,
        ):
            raise ValueError(
                f"realization has (K, N_BS) = ({self.num_subcarriers}, {self.num_bs_antennas}), "
                f"config expects ({config.num_subcarriers}, {config.num_bs_antennas})"
            )


@dataclass(frozen=True, eq=False)
class Precoders:
    """Unit-norm transmit beamformers, one column vector per subcarrier (rows here)."""

    v_sr: np.ndarray
    v_sd: np.ndarray

    def __post_init__(self):
        for name in ("v_sr", "v_sd"):
            v = np.asarray(getattr(self, name), dtype=complex)
            norms = np.linalg.norm(v, axis=1)
            if not np.allclose(norms, 1.0, rtol=0, atol=1e-12):
                raise ValueError(f"{name} rows must have unit Euclidean norm")
            object.__setattr__(self, name, _frozen(v))


def _cn(rng, shape, variance):
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_channels(config: SystemConfig, seed: int) -> ChannelRealization:
    """Draw one channel realization, deterministic in ``(config, seed)``.

    Link strengths are per-entry variances of the true channel, so each
    estimated entry has variance ``strength - err_var``. The self-interference
    channel is Rician: mean ``sqrt(rho_si K_R / (1 + K_R))`` and scattered
    variance ``rho_si / (1 + K_R)``, from which the error variance is removed
    (clipped at zero). Every link draws from its own spawned stream, so
    changing one link's parameters never perturbs another link's draws.
    """
    K, N = config.num_subcarriers, config.num_bs_antennas
    strengths = {
        "sr": config.strength_sr,
        "sd": config.strength_sd,
        "rd": config.strength_rd,
        "rr": config.strength_si,
    }
    err_vars = {
        "sr": config.err_var_sr,
        "sd": config.err_var_sd,
        "rd": config.err_var_rd,
        "rr": config.err_var_rr,
    }
    for link in _LINKS:
        if np.any(err_vars[link] > strengths[link]):
            raise ConfigError(
                f"err_var_{link} exceeds the {link} link strength {strengths[link]!r}; "
                "the estimated channel would need negative variance"
            )

    streams = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).spawn(len(_LINKS))
    rngs = {link: np.random.Generator(np.random.PCG64(s)) for link, s in zip(_LINKS, streams)}

    h_sr = _cn(rngs["sr"], (K, N), (strengths["sr"] - err_vars["sr"])[:, None])
    h_sd = _cn(rngs["sd"], (K, N), (strengths["sd"] - err_vars["sd"])[:, None])
    h_rd = _cn(rngs["rd"], (K,), strengths["rd"] - err_vars["rd"])

    k_r = config.rician_k
    mean_rr = np.sqrt(config.strength_si * k_r / (1.0 + k_r))
    scatter_rr = np.maximum(config.strength_si / (1.0 + k_r) - err_vars["rr"], 0.0)
    h_rr = mean_rr + _cn(rngs["rr"], (K,), scatter_rr)

    return ChannelRealization(h_sr, h_sd, h_rd, h_rr, err_vars)


def mrt_precoders(channels: ChannelRealization) -> Precoders:
    """Maximum-ratio transmit beamformers ``v = h^H / ||h||``."""
    out = {}
    for name, h in (("v_sr", channels.h_hat_sr), ("v_sd", channels.h_hat_sd)):
        norms = np.linalg.norm(h, axis=1)
        if np.any(norms == 0):
            k = int(np.flatnonzero(norms == 0)[0])
            raise ValueError(f"zero-norm channel on subcarrier {k}; MRT is undefined")
        out[name] = h.conj() / norms[:, None]
    return Precoders(**out)
