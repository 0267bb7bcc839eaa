"""Successive inner approximation for the joint subcarrier/power allocation.

The sum rate ``sum_k R_sd^k + min(R_sr^k, R_rd^k)`` is maximized in epigraph
form with one auxiliary rate ``t_k`` per subcarrier. Each outer iteration
replaces every link rate by its concave lower bound at the current anchor and
solves the resulting convex program with a dense primal-dual interior-point
method; the solution becomes the next anchor.

If the primal-dual method stalls, a log-barrier Newton method restarts it
from a central point. After each step the anchor may move further: by
extrapolating along the step, or by a local SLSQP solve of the exact
problem. Either candidate is kept only when it raises the true sum rate, so
the objective sequence stays nondecreasing.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .rates import PowerAllocation, RateReport, relay_links

__all__ = [
    "SolverOptions",
    "SolveTrace",
    "SolverError",
    "InnerSolverError",
    "AllocationProblem",
    "rs_problem",
    "solve_surrogate",
    "sia_solve",
    "solve_problem",
    "surrogate_step",
    "true_kkt_residual",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    max_outer_iters: int = 50
    outer_tol: float = 1e-6
    inner_tol: float = 1e-8
    max_inner_iters: int = 200
    power_floor: float = 1e-12
    # push each new anchor further along the last move while the sum rate grows
    extrapolate: bool = True
    # local quasi-Newton polish of each anchor on the exact rates
    polish: bool = True
    polish_iters: int = 100
    # primal-dual barrier parameters
    barrier_growth: float = 10.0
    ls_beta: float = 0.5

    def __post_init__(self):
        if self.max_outer_iters < 1 or self.max_inner_iters < 1:
            raise ValueError("iteration limits must be at least 1")
        for name in ("outer_tol", "inner_tol", "power_floor", "barrier_growth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.barrier_growth <= 1:
            raise ValueError("barrier_growth must exceed 1")


@dataclass
class SolveTrace:
    """Per-iteration history of one outer solve.

    ``true_objectives[0]`` is the sum rate at the initial allocation;
    entry ``a`` is the sum rate after outer iteration ``a``.
    """

    surrogate_objectives: list = field(default_factory=list)
    true_objectives: list = field(default_factory=list)
    kkt_residuals: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)
    iterations: int = 0
    termination: str = ""
    final_objective: float = float("nan")
    final_kkt_residual: float = float("nan")


class SolverError(RuntimeError):
    """An outer iteration failed; ``iteration`` is the 1-based outer index."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class InnerSolverError(SolverError):
    """The interior-point method stopped before reaching its tolerance."""

    def __init__(self, message, best_x=None, residual=float("nan")):
        super().__init__(message)
        self.best_x = best_x
        self.residual = residual


@dataclass(frozen=True, eq=False)
class AllocationProblem:
    """Sum-rate problem over the stacked powers ``[p_sr, p_sd, p_rd]``.

    ``links`` may hold ``"sd"`` and/or both of ``"sr"``, ``"rd"``; absent
    links contribute nothing. Powers outside ``free`` stay at zero.
    """

    links: dict
    free: np.ndarray
    power_source: float
    power_relay: float

    def __post_init__(self):
        free = np.asarray(self.free, dtype=bool).copy()
        K = free.shape[0] // 3
        if free.shape != (3 * K,) or K < 1:
            raise ValueError("free must be a boolean mask of length 3K")
        if ("sr" in self.links) != ("rd" in self.links):
            raise ValueError("the relay path needs both the sr and rd links")
        # an empty budget pins its powers to zero
        if self.power_source <= 0:
            free[: 2 * K] = False
        if self.power_relay <= 0:
            free[2 * K :] = False
        free.setflags(write=False)
        object.__setattr__(self, "free", free)

    @property
    def num_subcarriers(self):
        return self.free.shape[0] // 3

    @property
    def has_relay(self):
        return "sr" in self.links

    @property
    def has_direct(self):
        return "sd" in self.links

    def report(self, p) -> RateReport:
        K = self.num_subcarriers
        zero = np.zeros(K)
        rates = {name: self.links[name].rate(p) if name in self.links else zero for name in ("sr", "rd", "sd")}
        return RateReport.from_rates(rates["sr"], rates["rd"], rates["sd"])

    def objective(self, p):
        return self.report(p).r_total

    def uniform_start(self):
        """Equal split of each budget over the free powers of that node."""
        K = self.num_subcarriers
        p = np.zeros(3 * K)
        src = self.free.copy()
        src[2 * K :] = False
        rel = self.free.copy()
        rel[: 2 * K] = False
        if src.any():
            p[src] = self.power_source / src.sum()
        if rel.any():
            p[rel] = self.power_relay / rel.sum()
        return p


def rs_problem(coeffs, config):
    """Full rate-splitting problem: every power free, all three links present."""
    K = coeffs.num_subcarriers
    return AllocationProblem(
        relay_links(coeffs, config), np.ones(3 * K, dtype=bool), config.power_source, config.power_relay
    )


# ---------------------------------------------------------------------------
# inner convex program
# ---------------------------------------------------------------------------


class _Surrogate:
    """Convex program ``min f0(x) s.t. f_i(x) <= 0`` for one anchor.

    ``x = [q, t]``: ``q`` are the free powers, ``t`` one epigraph rate per
    subcarrier (only when the relay path is present).
    """

    def __init__(self, problem, anchor, floor):
        self.problem = problem
        self.anchor = anchor
        self.floor = floor
        K = problem.num_subcarriers
        self.K = K
        self.idx = np.flatnonzero(problem.free)
        self.nq = self.idx.size
        self.nt = K if problem.has_relay else 0
        self.n = self.nq + self.nt
        self.src = self.idx < 2 * K
        self.rel = ~self.src
        rows = []
        if problem.has_relay:
            rows += ["sr", "rd"]
        self.relay_rows = rows
        self.m = K * len(rows) + self.nq + int(self.src.any()) + int(self.rel.any())

    def embed(self, q):
        p = np.zeros(3 * self.K)
        p[self.idx] = q
        return p

    def split(self, x):
        return x[: self.nq], x[self.nq :]

    def objective_value(self, x):
        """Surrogate objective (to be maximized)."""
        q, t = self.split(x)
        p = self.embed(q)
        value = t.sum()
        if self.problem.has_direct:
            value += self.problem.links["sd"].bound(p, self.anchor).sum()
        return float(value)

    def constraints(self, x):
        q, t = self.split(x)
        p = self.embed(q)
        parts = []
        for name in self.relay_rows:
            parts.append(t - self.problem.links[name].bound(p, self.anchor))
        parts.append(self.floor - q)
        if self.src.any():
            parts.append([q[self.src].sum() - self.problem.power_source])
        if self.rel.any():
            parts.append([q[self.rel].sum() - self.problem.power_relay])
        return np.concatenate([np.atleast_1d(np.asarray(a, dtype=float)) for a in parts])

    def derivatives(self, x, lam):
        """Gradient of f0, constraint values and Jacobian, Hessian of the Lagrangian."""
        q, t = self.split(x)
        p = self.embed(q)
        K, nq, n = self.K, self.nq, self.n
        links = self.problem.links

        g0 = np.zeros(n)
        H = np.zeros((n, n))
        g0[nq:] = -1.0
        if self.problem.has_direct:
            sd = links["sd"]
            g0[:nq] -= sd.bound_grad(p, self.anchor)[:, self.idx].sum(axis=0)
            A, w = sd.bound_curvature(p)
            A = A[:, self.idx]
            H[:nq, :nq] += (A.T * w) @ A

        f = self.constraints(x)
        D = np.zeros((self.m, n))
        row = 0
        for name in self.relay_rows:
            link = links[name]
            D[row : row + K, :nq] = -link.bound_grad(p, self.anchor)[:, self.idx]
            D[row : row + K, nq:] = np.eye(K)
            A, w = link.bound_curvature(p)
            A = A[:, self.idx]
            H[:nq, :nq] += (A.T * (w * lam[row : row + K])) @ A
            row += K
        D[row : row + nq, :nq] = -np.eye(nq)
        row += nq
        if self.src.any():
            D[row, :nq] = self.src
            row += 1
        if self.rel.any():
            D[row, :nq] = self.rel
        return g0, f, D, H

    def start(self, anchor_q):
        """Strictly interior starting point near the anchor."""
        center = np.where(
            self.src,
            self.problem.power_source / max(2 * self.src.sum(), 1),
            self.problem.power_relay / max(2 * self.rel.sum(), 1),
        )
        q = 0.99 * anchor_q + 0.01 * center
        q = np.maximum(q, 10 * self.floor + 1e-3 * center)
        t = np.zeros(self.nt)
        if self.nt:
            p = self.embed(q)
            bounds = [self.problem.links[name].bound(p, self.anchor) for name in self.relay_rows]
            t = np.minimum(*bounds) - 1.0
        return np.concatenate([q, t])


def _primal_dual(sur, x, opts, lam=None):
    """Primal-dual interior-point iterations; returns ``(x, lam, residual, iters)``."""
    f = sur.constraints(x)
    if np.any(f >= 0):
        raise InnerSolverError("interior-point start is not strictly feasible", x)
    if lam is None:
        lam = 1.0 / -f
    mu, beta, tol = opts.barrier_growth, opts.ls_beta, opts.inner_tol
    m = sur.m
    best = (np.inf, x, lam)

    for it in range(1, opts.max_inner_iters + 1):
        f = sur.constraints(x)
        eta = float(-f @ lam)
        tau = mu * m / eta
        g0, f, D, H = sur.derivatives(x, lam)
        r_dual = g0 + D.T @ lam
        r_cent = -lam * f - 1.0 / tau
        kkt = max(float(np.max(np.abs(r_dual))), eta)
        if kkt < best[0]:
            best = (kkt, x, lam)
        if kkt <= tol:
            return x, lam, kkt, it

        scale = lam / -f
        M = H + (D.T * scale) @ D
        rhs = -r_dual - D.T @ (r_cent / f)
        try:
            dx = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(M, rhs, rcond=None)[0]
        dlam = (r_cent - lam * (D @ dx)) / f

        # fraction-to-boundary steps only; a residual-norm merit search
        # stalls on degenerate subcarriers where both relay hops switch off
        neg = dlam < 0
        s = min(1.0, 0.99 * float(np.min(-lam[neg] / dlam[neg]))) if neg.any() else 1.0
        while s > 1e-16:
            with np.errstate(invalid="ignore", divide="ignore"):
                f_new = sur.constraints(x + s * dx)
            if np.all(np.isfinite(f_new)) and np.all(f_new < 0):
                break
            s *= beta
        if s <= 1e-16:
            break
        x, lam = x + s * dx, lam + s * dlam

    kkt, x_best, _ = best
    raise InnerSolverError(
        f"interior-point method stopped with KKT residual {kkt:.3g} > {tol:.3g}",
        best_x=x_best,
        residual=kkt,
    )


def _barrier(sur, x, opts, tol):
    """Log-barrier method with damped Newton centering; returns ``(x, lam, residual, iters)``.

    Slower than :func:`_primal_dual` but globally convergent: every
    constraint's curvature enters the Newton system with weight ``1 / -f_i``,
    so steps never stall against a curved constraint with a tiny multiplier.
    """
    m = sur.m
    tau = 1.0
    iters = 0

    def phi(z):
        with np.errstate(invalid="ignore", divide="ignore"):
            f = sur.constraints(z)
        if not np.all(np.isfinite(f)) or np.any(f >= 0):
            return np.inf
        return -tau * sur.objective_value(z) - np.log(-f).sum()

    best = (np.inf, x, None)
    while iters < 50 * opts.max_inner_iters:
        for _ in range(opts.max_inner_iters):
            iters += 1
            f = sur.constraints(x)
            w = 1.0 / -f
            g0, f, D, H = sur.derivatives(x, w / tau)
            grad = tau * g0 + D.T @ w
            hess = tau * H + (D.T * w**2) @ D
            try:
                dx = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                dx = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            decrement = float(-grad @ dx)
            if decrement <= 1e-12:
                break
            s, value = 1.0, phi(x)
            while s > 1e-14 and not phi(x + s * dx) <= value - 0.01 * s * decrement:
                s *= opts.ls_beta
            if s <= 1e-14:
                break
            x = x + s * dx
        f = sur.constraints(x)
        lam = 1.0 / (-tau * f)
        g0, _, D, _ = sur.derivatives(x, lam)
        kkt = max(float(np.max(np.abs(g0 + D.T @ lam))), m / tau)
        if kkt < best[0]:
            best = (kkt, x, lam)
        if kkt <= tol:
            return x, lam, kkt, iters
        if m / tau <= tol:
            break
        tau *= opts.barrier_growth
    kkt, x_best, _ = best
    raise InnerSolverError(
        f"barrier method stopped with KKT residual {kkt:.3g} > {tol:.3g}", best_x=x_best, residual=kkt
    )


@dataclass(frozen=True, eq=False)
class _StepResult:
    p: np.ndarray
    t: np.ndarray
    lam: np.ndarray
    residual: float
    surrogate_objective: float
    iterations: int


def surrogate_step(problem, anchor, opts=None):
    """Maximize the concave surrogate anchored at ``anchor`` (stacked powers)."""
    opts = opts or SolverOptions()
    anchor = np.asarray(anchor, dtype=float)
    if np.any(anchor < 0) or np.any(anchor[~problem.free] != 0):
        raise ValueError("anchor must be nonnegative and zero on frozen powers")
    K = problem.num_subcarriers
    if anchor[: 2 * K].sum() > problem.power_source * (1 + 1e-9) + 1e-15 or anchor[
        2 * K :
    ].sum() > problem.power_relay * (1 + 1e-9) + 1e-15:
        raise ValueError("anchor violates a power budget")
    for link in problem.links.values():
        link._anchor_denominator(anchor)

    sur = _Surrogate(problem, anchor, opts.power_floor)
    if sur.n == 0:
        lam, residual, iters = np.zeros(0), 0.0, 0
        q = np.zeros(0)
    else:
        x0 = sur.start(anchor[sur.idx])
        try:
            x, lam, residual, iters = _primal_dual(sur, x0, opts)
        except InnerSolverError as exc:
            logger.debug("primal-dual failed (%s); retrying with the barrier method", exc)
            # the barrier path reaches the neighborhood where Newton is fast
            x, lam, _, warm = _barrier(sur, x0, opts, max(opts.inner_tol, 1e-4))
            x, lam, residual, iters = _primal_dual(sur, x, opts, lam)
            iters += warm
        q = x[: sur.nq]
    p = sur.embed(q)
    if problem.has_relay:
        t = np.minimum(problem.links["sr"].bound(p, anchor), problem.links["rd"].bound(p, anchor))
    else:
        t = np.zeros(K)
    value = float(t.sum())
    if problem.has_direct:
        value += float(problem.links["sd"].bound(p, anchor).sum())
    return _StepResult(p, t, lam, residual, value, iters)


def solve_surrogate(coeffs, anchor, config, opts=None) -> PowerAllocation:
    """One convex surrogate solve of the rate-splitting problem."""
    step = surrogate_step(rs_problem(coeffs, config), anchor.stacked(), opts)
    return PowerAllocation.from_stacked(step.p, step.t)


def true_kkt_residual(problem, p, lam, floor):
    """KKT residual of the epigraph problem at ``p`` with multipliers ``lam``.

    Uses the exact rate gradients, so a converged surrogate solution (whose
    bounds share the rate's slope at the anchor) scores close to zero.
    """
    sur = _Surrogate(problem, p, floor)
    q = p[sur.idx]
    links = problem.links
    K, nq = sur.K, sur.nq
    if problem.has_relay:
        t = np.minimum(links["sr"].rate(p), links["rd"].rate(p))
    else:
        t = np.zeros(0)
    x = np.concatenate([q, t])
    # with anchor == p the bound values and gradients equal the rate's
    g0, f, D, _ = sur.derivatives(x, lam)
    r_dual = g0 + D.T @ lam
    return max(
        float(np.max(np.abs(r_dual))) if r_dual.size else 0.0,
        float(np.max(np.maximum(f, 0.0))) if f.size else 0.0,
        float(np.max(np.abs(lam * f))) if f.size else 0.0,
    )


def _project(problem, p):
    """Clip to nonnegative powers and scale each node back onto its budget."""
    K = problem.num_subcarriers
    p = np.maximum(p, 0.0)
    p[~problem.free] = 0.0
    for sl, budget in ((slice(0, 2 * K), problem.power_source), (slice(2 * K, 3 * K), problem.power_relay)):
        total = p[sl].sum()
        if total > budget:
            p[sl] *= budget / total
    return p


def _extrapolate(problem, previous, p, value, max_doublings=8):
    """Try ``p + s (p - previous)`` for ``s = 1, 2, 4, ...``; keep the best sum rate."""
    d = p - previous
    best_p, best_value = p, value
    s = 1.0
    for _ in range(max_doublings):
        trial = _project(problem, p + s * d)
        trial_value = problem.objective(trial)
        if not trial_value > best_value:
            break
        best_p, best_value = trial, trial_value
        s *= 2.0
    return best_p, best_value


def _polish(problem, p, max_iters=100):
    """SLSQP on the exact epigraph problem started at ``p``; returns a feasible point."""
    K = problem.num_subcarriers
    links = problem.links
    idx = np.flatnonzero(problem.free)
    nq = idx.size
    nt = K if problem.has_relay else 0
    src = idx < 2 * K

    def embed(x):
        out = np.zeros(3 * K)
        out[idx] = x[:nq]
        return out

    def neg_objective(x):
        value = x[nq:].sum()
        if problem.has_direct:
            value += links["sd"].rate(embed(x)).sum()
        return -value

    def neg_gradient(x):
        g = np.concatenate([np.zeros(nq), np.ones(nt)])
        if problem.has_direct:
            g[:nq] += links["sd"].rate_grad(embed(x))[:, idx].sum(axis=0)
        return -g

    constraints = []
    if nt:
        hops = (links["sr"], links["rd"])
        minus_t = np.vstack([-np.eye(K), -np.eye(K)])
        constraints.append(
            dict(
                type="ineq",
                fun=lambda x: np.concatenate([link.rate(embed(x)) - x[nq:] for link in hops]),
                jac=lambda x: np.hstack([np.vstack([link.rate_grad(embed(x))[:, idx] for link in hops]), minus_t]),
            )
        )
    rows, totals = [], []
    for mask, total in ((src, problem.power_source), (~src, problem.power_relay)):
        if mask.any():
            rows.append(np.concatenate([-mask.astype(float), np.zeros(nt)]))
            totals.append(total)
    if rows:
        A, b = np.array(rows), np.array(totals)
        constraints.append(dict(type="ineq", fun=lambda x: b + A @ x, jac=lambda x: A))
    t0 = np.minimum(links["sr"].rate(p), links["rd"].rate(p)) if nt else np.zeros(0)
    result = minimize(
        neg_objective,
        np.concatenate([p[idx], t0]),
        jac=neg_gradient,
        bounds=[(0.0, None)] * nq + [(None, None)] * nt,
        constraints=constraints,
        method="SLSQP",
        options={"maxiter": max_iters, "ftol": 1e-12},
    )
    return _project(problem, embed(result.x))


def solve_problem(problem, opts=None, init=None):
    """Outer successive-approximation loop; returns ``(p, t, trace)``."""
    opts = opts or SolverOptions()
    p = problem.uniform_start() if init is None else np.asarray(init, dtype=float).copy()
    if init is not None:
        p[~problem.free] = 0.0
    trace = SolveTrace()
    current = problem.objective(p)
    trace.true_objectives.append(current)
    lam = np.zeros(0)
    for a in range(1, opts.max_outer_iters + 1):
        try:
            step = surrogate_step(problem, p, opts)
        except SolverError as exc:
            exc.iteration = a
            raise
        new = problem.objective(step.p)
        previous, p = p, step.p
        if opts.extrapolate:
            p, new = _extrapolate(problem, previous, p, new)
        if opts.polish and problem.free.any():
            candidate = _polish(problem, p, opts.polish_iters)
            value = problem.objective(candidate)
            if value > new:
                p, new = candidate, value
        lam = step.lam
        trace.surrogate_objectives.append(step.surrogate_objective)
        trace.true_objectives.append(new)
        trace.kkt_residuals.append(step.residual)
        trace.inner_iterations.append(step.iterations)
        trace.iterations = a
        delta = new - current
        current = new
        if delta < opts.outer_tol:
            trace.termination = "converged"
            break
    else:
        trace.termination = "max_iters"
    trace.final_objective = current
    if opts.extrapolate or opts.polish:
        # multipliers of the returned point, not of the last surrogate
        lam = surrogate_step(problem, p, opts).lam
    trace.final_kkt_residual = true_kkt_residual(problem, p, lam, opts.power_floor)
    report = problem.report(p)
    t = np.minimum(report.r_sr, report.r_rd) if problem.has_relay else np.zeros(problem.num_subcarriers)
    logger.debug("outer loop %s after %d iterations, objective %.9g", trace.termination, trace.iterations, current)
    return p, t, trace


def sia_solve(coeffs, config, opts=None, init=None):
    """Rate-splitting allocation from the uniform start (or ``init``)."""
    problem = rs_problem(coeffs, config)
    start = None if init is None else init.stacked()
    p, t, trace = solve_problem(problem, opts, start)
    return PowerAllocation.from_stacked(p, t), trace
