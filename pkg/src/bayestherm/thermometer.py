"""Scikit-learn style front end: counts in, temperatures out."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_counts, check_temperatures, parse_gamma_tau
from .estimators import SQUARE_PREFACTOR, EstimatorKind
from .global_metrics import outcome_table
from .posterior import ImpossibleOutcomeError, build_grid, posterior
from .priors import PriorSpec, build_prior
from .sensitivity import UndetectableError, detectable_range
from .thermal_model import ProbeConfig


class BayesianThermometer(BaseEstimator):
    """Uninformed Bayesian temperature estimate from the number of excited probes.

    ``fit`` needs no data: it tabulates the posterior for every possible count
    under the chosen prior.  ``predict`` then maps counts to estimates in
    units of ``energy_scale`` (reduced units by default).

    Parameters
    ----------
    n_probes : int
        Number of qubit probes N.
    gamma_tau : float or "inf"
        Dimensionless coupling time; ``inf`` is full thermalization.
    estimator : str
        One of ``md, 1, 1r, 2, 2r, 2l``.
    prior : str
        ``jeffreys``, ``flat`` or ``reciprocal``.
    t_min, t_max, grid_step : float
        Temperature grid (reduced units), also the support of the prior.
    energy_scale : float
        Probe gap ``E / k_B`` used to convert to physical temperatures.

    Examples
    --------
    >>> est = BayesianThermometer(n_probes=200, estimator="2r").fit()
    >>> est.predict([50]).round(3)
    array([0.891])
    """

    def __init__(self, n_probes=200, gamma_tau="inf", estimator="2r", prior="jeffreys",
                 t_min=0.01, t_max=200.0, grid_step=1e-3, energy_scale=1.0):
        self.n_probes = n_probes
        self.gamma_tau = gamma_tau
        self.estimator = estimator
        self.prior = prior
        self.t_min = t_min
        self.t_max = t_max
        self.grid_step = grid_step
        self.energy_scale = energy_scale

    def fit(self, X=None, y=None):
        self.kind_ = EstimatorKind.parse(self.estimator)
        self.probe_ = ProbeConfig(self.n_probes, parse_gamma_tau(self.gamma_tau), self.energy_scale)
        self.grid_ = build_grid(self.t_min, self.t_max, step=self.grid_step)
        self.prior_ = build_prior(PriorSpec(self.prior), self.probe_, self.grid_)
        self.table_ = outcome_table(self.prior_, self.probe_)
        try:
            self.detectable_range_ = detectable_range(self.probe_)
        except UndetectableError:
            self.detectable_range_ = None
        if X is not None:
            check_counts(X, self.probe_.n_probes)
        return self

    def _lookup(self, X, values):
        check_is_fitted(self, "table_")
        n = check_counts(X, self.probe_.n_probes)
        bad = ~self.table_.possible[n]
        if np.any(bad):
            raise ImpossibleOutcomeError(f"counts {np.unique(n[bad]).tolist()} have zero evidence")
        return values[n]

    def predict(self, X):
        """Point estimates for each count, in units of ``energy_scale``."""
        check_is_fitted(self, "table_")
        theta = self._lookup(X, self.table_.estimates[self.kind_])
        return self.probe_.to_physical(theta)

    def predict_error(self, X):
        """Matched error of the estimator for each count (not defined for the mode)."""
        check_is_fitted(self, "table_")
        if self.kind_ is EstimatorKind.MODE:
            raise ValueError("the mode estimator has no error measure")
        return self.probe_.to_physical(self._lookup(X, self.table_.errors[self.kind_]))

    def predict_interval(self, X):
        """90% credible interval ``(q05, q95)`` per count, shape ``(n, 2)``."""
        check_is_fitted(self, "table_")
        lo = self._lookup(X, self.table_.q05)
        hi = self._lookup(X, self.table_.q95)
        return self.probe_.to_physical(np.column_stack([lo, hi]))

    def posterior(self, n):
        """Full :class:`~bayestherm.posterior.Posterior` for one count."""
        check_is_fitted(self, "table_")
        return posterior(int(n), self.prior_, self.probe_)

    def score(self, X, y):
        """Negative relative RMS deviation ``-3.29 sqrt(mean((theta/T - 1)^2))``."""
        theta = self.predict(X)
        y = check_temperatures(y)
        if y.shape != theta.shape:
            raise ValueError("X and y have inconsistent lengths")
        return -SQUARE_PREFACTOR * math.sqrt(float(np.mean((theta / y - 1.0) ** 2)))
