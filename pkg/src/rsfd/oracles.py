"""Independent reference solutions used to check the solver.

* :func:`water_filling` is the closed-form optimum of a sum of
  ``log2(1 + g_k p_k)`` under a total-power budget.
* :func:`grid_search` exhaustively scores every allocation on a uniform grid
  for one or two subcarriers without inter-carrier coupling.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .rates import LN2, PowerAllocation

__all__ = ["water_filling", "GridResult", "grid_search"]


def water_filling(gains, budget):
    """Powers maximizing ``sum_k log2(1 + gains[k] p[k])`` with ``sum p <= budget``.

    ``p[k] = max(0, mu - 1 / gains[k])`` where the water level ``mu`` is found
    by root bracketing. Zero gains get zero power.
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains < 0) or budget < 0:
        raise ValueError("gains and budget must be nonnegative")
    p = np.zeros_like(gains)
    active = gains > 0
    if budget == 0 or not active.any():
        return p
    floors = 1.0 / gains[active]

    def excess(mu):
        return np.maximum(mu - floors, 0.0).sum() - budget

    mu = brentq(excess, floors.min(), floors.max() + 2 * budget, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    p[active] = np.maximum(mu - floors, 0.0)
    # remove the bracketing residue so the budget holds exactly
    p *= min(1.0, budget / p.sum())
    return p


@dataclass(frozen=True)
class GridResult:
    value: float
    allocation: PowerAllocation


def _check_decoupled(coeffs):
    for name in ("gamma_sr", "gamma_rd", "gamma_sd", "gbar_sr", "gbar_rd", "gbar_sd", "gtilde_sd"):
        matrix = getattr(coeffs, name)
        if np.any(matrix != np.diag(np.diag(matrix))):
            raise ValueError(f"{name} couples subcarriers; grid search needs a decoupled instance")


def _subcarrier_table(coeffs, config, k, a, r):
    """Sum rate of subcarrier ``k`` on the grid ``(p_sr, p_sd, p_rd) = (a[i], a[j], r[l])``."""
    A = a[:, None, None]
    B = a[None, :, None]
    R = r[None, None, :]
    c = config.rate_prefactor / LN2
    at = lambda name: getattr(coeffs, name)[k, k]  # noqa: E731
    relay_in = coeffs.alpha_r[k] + at("gamma_sr") * A + at("gamma_sd") * B + at("gamma_rd") * R
    dest_common = coeffs.alpha_d[k] + at("gbar_sr") * A + at("gbar_rd") * R
    r_sr = c * np.log1p(coeffs.gain_sr[k] * A / relay_in)
    r_rd = c * np.log1p(coeffs.gain_rd[k] * R / (dest_common + at("gbar_sd") * B))
    r_sd = c * np.log1p(coeffs.gain_sd[k] * B / (dest_common + at("gtilde_sd") * B))
    return r_sd + np.minimum(r_sr, r_rd)


def _best_per_split(table):
    """``out[s, l]`` = best value with ``i + j <= s``, plus the maximizing ``(i, j)``."""
    n = table.shape[0]
    value = np.full((n, n), -np.inf)
    arg_i = np.zeros((n, n), dtype=int)
    for i in range(n):
        # table[i, j, l] sits on split s = i + j
        cand = table[i, : n - i, :]
        better = cand > value[i:, :]
        value[i:, :] = np.where(better, cand, value[i:, :])
        arg_i[i:, :] = np.where(better, i, arg_i[i:, :])
    # allow unspent source power: running maximum over s
    best = value.copy()
    best_s = np.tile(np.arange(n)[:, None], (1, n))
    for s in range(1, n):
        keep = best[s - 1] >= best[s]
        best[s] = np.where(keep, best[s - 1], best[s])
        best_s[s] = np.where(keep, best_s[s - 1], best_s[s])
    i = np.take_along_axis(arg_i, best_s, axis=0)
    return best, i, best_s - i


def grid_search(coeffs, config, points=200):
    """Exhaustive search over ``points`` values per power and subcarrier.

    Each power takes the values ``linspace(0, budget, points)``; the two
    source powers share a grid step, so the source budget reads
    ``i + j <= points - 1`` in grid units. Only ``K`` in ``{1, 2}`` and
    coefficient matrices without off-diagonal entries are supported.
    """
    K = coeffs.num_subcarriers
    if K not in (1, 2):
        raise ValueError("grid search supports one or two subcarriers")
    _check_decoupled(coeffs)
    n = int(points)
    a = np.linspace(0.0, config.power_source, n)
    r = np.linspace(0.0, config.power_relay, n)

    tables = [_best_per_split(_subcarrier_table(coeffs, config, k, a, r)) for k in range(K)]
    if K == 1:
        best, ii, jj = tables[0]
        # full budgets are always available
        l = int(np.argmax(best[n - 1]))
        s = n - 1
        powers = [(ii[s, l], jj[s, l], l)]
        value = float(best[s, l])
    else:
        (b1, i1, j1), (b2, i2, j2) = tables
        # best of subcarrier 2 given leftover (s, l), with the maximizing leftover indices
        c2 = b2.copy()
        s2 = np.tile(np.arange(n)[:, None], (1, n))
        l2 = np.tile(np.arange(n)[None, :], (n, 1))
        for l in range(1, n):
            keep = c2[:, l - 1] >= c2[:, l]
            c2[:, l] = np.where(keep, c2[:, l - 1], c2[:, l])
            s2[:, l] = np.where(keep, s2[:, l - 1], s2[:, l])
            l2[:, l] = np.where(keep, l2[:, l - 1], l2[:, l])
        total = b1 + c2[::-1, ::-1]
        s, l = np.unravel_index(int(np.argmax(total)), total.shape)
        value = float(total[s, l])
        rs, rl = n - 1 - s, n - 1 - l
        ss, ll = s2[rs, rl], l2[rs, rl]
        powers = [(i1[s, l], j1[s, l], l), (i2[ss, ll], j2[ss, ll], ll)]
    allocation = PowerAllocation(
        np.array([a[i] for i, _, _ in powers]),
        np.array([a[j] for _, j, _ in powers]),
        np.array([r[l] for _, _, l in powers]),
    )
    return GridResult(value, allocation)
