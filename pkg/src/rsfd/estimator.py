"""Estimator-style front end: fit an allocation to one channel realization."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .benchmarks import SchemeId, hd_coefficients, hd_problem, solve_realization
from .channel import ChannelRealization, mrt_precoders
from .config import SystemConfig
from .distortion import build_coefficients
from .rates import total_rate
from .solver import SolverOptions

__all__ = ["PowerAllocator"]


class PowerAllocator(BaseEstimator):
    """Power allocation for one scheme, fitted to a channel realization.

    Parameters
    ----------
    config : SystemConfig, optional
        System parameters; defaults to the standard setup.
    scheme : str
        One of ``RS``, ``RS_ND``, ``ODL``, ``ORL``, ``HD``.
    max_outer_iters, outer_tol, inner_tol : solver limits.
    extrapolate, polish : bool
        Anchor acceleration switches of the outer loop.

    Attributes
    ----------
    allocation_ : PowerAllocation
    report_ : RateReport
        Rates of ``allocation_`` on the training realization.
    """

    def __init__(
        self,
        config=None,
        scheme="RS",
        max_outer_iters=50,
        outer_tol=1e-6,
        inner_tol=1e-8,
        extrapolate=True,
        polish=True,
    ):
        self.config = config
        self.scheme = scheme
        self.max_outer_iters = max_outer_iters
        self.outer_tol = outer_tol
        self.inner_tol = inner_tol
        self.extrapolate = extrapolate
        self.polish = polish

    def _config(self):
        config = SystemConfig() if self.config is None else self.config
        if not isinstance(config, SystemConfig):
            raise TypeError(f"config must be a SystemConfig, got {type(config).__name__}")
        return config

    def _check_channels(self, X, config):
        if not isinstance(X, ChannelRealization):
            raise TypeError(f"X must be a ChannelRealization, got {type(X).__name__}")
        X.check_matches(config)
        return X

    def fit(self, X, y=None):
        """Solve the allocation problem on realization ``X``; ``y`` is ignored."""
        config = self._config()
        X = self._check_channels(X, config)
        scheme = SchemeId(self.scheme)
        opts = SolverOptions(
            max_outer_iters=self.max_outer_iters,
            outer_tol=self.outer_tol,
            inner_tol=self.inner_tol,
            extrapolate=self.extrapolate,
            polish=self.polish,
        )
        results = solve_realization(X, mrt_precoders(X), config, [scheme], opts)
        self.allocation_, self.report_ = results[scheme]
        self.scheme_ = scheme
        return self

    def predict(self, X):
        """Rates the fitted allocation achieves on realization ``X`` (a ``RateReport``).

        Precoders follow ``X`` (MRT), powers stay as fitted.
        """
        check_is_fitted(self, "allocation_")
        config = self._config()
        X = self._check_channels(X, config)
        precoders = mrt_precoders(X)
        if self.scheme_ is SchemeId.HD:
            problem = hd_problem(hd_coefficients(X, precoders, config), config)
            return problem.report(self.allocation_.stacked())
        return total_rate(build_coefficients(X, precoders, config), self.allocation_, config)

    def score(self, X, y=None):
        """Sum rate in bits/s/Hz of the fitted allocation on ``X``."""
        return float(np.asarray(self.predict(X).r_total))
