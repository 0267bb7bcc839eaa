"""Comparison schemes: distortion-unaware design, single-path links, half duplex.

Every scheme reuses :func:`rsfd.solver.solve_problem`; a scheme is just a
choice of links, frozen powers and coefficients.
"""

import dataclasses
import enum

import numpy as np

from .distortion import build_coefficients
from .rates import LinkModel, PowerAllocation, relay_links, total_rate
from .solver import AllocationProblem, SolverOptions, rs_problem, solve_problem

__all__ = [
    "SchemeId",
    "odl_problem",
    "orl_problem",
    "hd_problem",
    "hd_coefficients",
    "solve_rs",
    "solve_rs_nd",
    "solve_odl",
    "solve_orl",
    "solve_hd",
    "solve_realization",
    "solve_scheme",
]


class SchemeId(str, enum.Enum):
    RS = "RS"
    RS_ND = "RS_ND"
    ODL = "ODL"
    ORL = "ORL"
    HD = "HD"

    def __str__(self):
        return self.value


def _mask(K, sr, sd, rd):
    return np.concatenate([np.full(K, sr), np.full(K, sd), np.full(K, rd)])


def odl_problem(coeffs, config):
    """Direct link only: ``p_sr = p_rd = 0``."""
    K = coeffs.num_subcarriers
    links = relay_links(coeffs, config)
    return AllocationProblem(
        {"sd": links["sd"]}, _mask(K, False, True, False), config.power_source, config.power_relay
    )


def orl_problem(coeffs, config):
    """Relay path only: ``p_sd = 0``."""
    K = coeffs.num_subcarriers
    links = relay_links(coeffs, config)
    return AllocationProblem(
        {"sr": links["sr"], "rd": links["rd"]},
        _mask(K, True, False, True),
        config.power_source,
        config.power_relay,
    )


def hd_coefficients(channels, precoders, config):
    """Coefficients for half duplex: the relay never transmits while it listens,
    so the relay transmit distortion does not leak onto other subcarriers."""
    return build_coefficients(channels, precoders, dataclasses.replace(config, kappa_relay=0.0))


def hd_problem(coeffs_hd, config):
    """Two equal slots: the source sends in slot 1, the relay in slot 2.

    No self-interference at the relay and no source streams at the
    destination while the relay forwards. Every rate carries a factor 1/2.
    """
    K = coeffs_hd.num_subcarriers
    Z = np.zeros((K, K))
    c = 0.5 * config.rate_prefactor
    sr = LinkModel(
        np.hstack([np.diag(coeffs_hd.gain_sr), Z, Z]),
        np.hstack([coeffs_hd.gamma_sr, coeffs_hd.gamma_sd, Z]),
        coeffs_hd.alpha_r,
        c,
    )
    sd = LinkModel(
        np.hstack([Z, np.diag(coeffs_hd.gain_sd), Z]),
        np.hstack([coeffs_hd.gbar_sr, coeffs_hd.gtilde_sd, Z]),
        coeffs_hd.alpha_d,
        c,
    )
    rd = LinkModel(
        np.hstack([Z, Z, np.diag(coeffs_hd.gain_rd)]),
        np.hstack([Z, Z, coeffs_hd.gbar_rd]),
        coeffs_hd.alpha_d,
        c,
    )
    return AllocationProblem(
        {"sr": sr, "rd": rd, "sd": sd}, np.ones(3 * K, dtype=bool), config.power_source, config.power_relay
    )


def _solve(problem, opts, init=None):
    p, t, trace = solve_problem(problem, opts, init)
    return PowerAllocation.from_stacked(p, t), problem.report(p), trace.iterations


def _rs(coeffs, config, opts, warm_starts=()):
    problem = rs_problem(coeffs, config)
    allocation, report, iters = _solve(problem, opts)
    for start in warm_starts:
        if not problem.objective(start.stacked()) > report.r_total:
            continue
        candidate = _solve(problem, opts, start.stacked())
        iters += candidate[2]
        if candidate[1].r_total > report.r_total:
            allocation, report = candidate[0], candidate[1]
    return allocation, report, iters


def _rs_nd(coeffs_true, coeffs_zero_distortion, config, opts):
    allocation, _, iters = _solve(rs_problem(coeffs_zero_distortion, config), opts)
    return allocation, total_rate(coeffs_true, allocation, config), iters


def solve_rs(coeffs, config, opts=None, warm_starts=()):
    """Full-duplex rate splitting from the uniform start, then from warm starts.

    Warm starts are :class:`PowerAllocation` objects feasible for the full
    problem. A warm start is only solved from when it already beats the best
    allocation so far; since every outer iteration ascends, the result is at
    least as good as every warm start.
    """
    return _rs(coeffs, config, opts or SolverOptions(), warm_starts)[:2]


def solve_rs_nd(coeffs_true, coeffs_zero_distortion, config, opts=None):
    """Design for a distortion-free system, then score the design under the true model."""
    return _rs_nd(coeffs_true, coeffs_zero_distortion, config, opts or SolverOptions())[:2]


def solve_odl(coeffs, config, opts=None):
    return _solve(odl_problem(coeffs, config), opts or SolverOptions())[:2]


def solve_orl(coeffs, config, opts=None):
    return _solve(orl_problem(coeffs, config), opts or SolverOptions())[:2]


def solve_hd(coeffs_hd, config, opts=None):
    return _solve(hd_problem(coeffs_hd, config), opts or SolverOptions())[:2]


def solve_realization(channels, precoders, config, schemes=tuple(SchemeId), opts=None, iterations=None):
    """Run several schemes on one realization; returns ``{SchemeId: (PowerAllocation, RateReport)}``.

    RS is warm-started from the ODL, ORL and RS-ND designs as well as the
    uniform split, so it never reports less than a scheme whose feasible set
    it contains. If ``iterations`` is a dict it receives the outer iteration
    count of every scheme.
    """
    opts = opts or SolverOptions()
    schemes = [SchemeId(s) for s in schemes]
    out = {}
    if SchemeId.HD in schemes:
        out[SchemeId.HD] = _solve(hd_problem(hd_coefficients(channels, precoders, config), config), opts)
    if any(s is not SchemeId.HD for s in schemes):
        coeffs = build_coefficients(channels, precoders, config)
        need_all = SchemeId.RS in schemes
        if need_all or SchemeId.ODL in schemes:
            out[SchemeId.ODL] = _solve(odl_problem(coeffs, config), opts)
        if need_all or SchemeId.ORL in schemes:
            out[SchemeId.ORL] = _solve(orl_problem(coeffs, config), opts)
        if need_all or SchemeId.RS_ND in schemes:
            belief = build_coefficients(channels, precoders, config.without_distortion())
            out[SchemeId.RS_ND] = _rs_nd(coeffs, belief, config, opts)
        if need_all:
            starts = [out[s][0] for s in (SchemeId.ODL, SchemeId.ORL, SchemeId.RS_ND)]
            out[SchemeId.RS] = _rs(coeffs, config, opts, starts)
    if iterations is not None:
        iterations.update({s: out[s][2] for s in schemes})
    return {s: out[s][:2] for s in schemes}


def solve_scheme(scheme, channels, precoders, config, opts=None):
    """Run one scheme on one realization; returns ``(PowerAllocation, RateReport)``."""
    scheme = SchemeId(scheme)
    return solve_realization(channels, precoders, config, [scheme], opts)[scheme]
