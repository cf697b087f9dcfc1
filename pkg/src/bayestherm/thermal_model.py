"""Closed-form physics of the ground-state qubit probe.

All temperatures are reduced, ``t = k_B T / E``.  A probe that couples to the
bath for a dimensionless time ``gamma_tau`` ends up excited with probability
``q_tau(t)``; ``gamma_tau = inf`` is the fully thermalized (Gibbs) probe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln

EQUILIBRIUM = math.inf


@dataclass(frozen=True)
class ProbeConfig:
    """Probe ensemble: ``n_probes`` identical qubits, coupling time ``gamma_tau``.

    ``energy_scale`` (E/k_B, in kelvin or whatever unit the caller uses) is
    only consulted by :meth:`to_reduced` / :meth:`to_physical`.
    """

    n_probes: int = 200
    gamma_tau: float = EQUILIBRIUM
    energy_scale: float = 1.0

    def __post_init__(self):
        if isinstance(self.n_probes, bool) or int(self.n_probes) != self.n_probes:
            raise ValueError(f"n_probes must be an integer, got {self.n_probes!r}")
        if self.n_probes < 1:
            raise ValueError(f"n_probes must be >= 1, got {self.n_probes}")
        object.__setattr__(self, "n_probes", int(self.n_probes))
        gt = float(self.gamma_tau)
        if math.isnan(gt) or gt < 0:
            raise ValueError(f"gamma_tau must be >= 0 or inf, got {self.gamma_tau!r}")
        object.__setattr__(self, "gamma_tau", gt)
        if not self.energy_scale > 0 or not math.isfinite(self.energy_scale):
            raise ValueError(f"energy_scale must be positive, got {self.energy_scale!r}")

    @property
    def is_equilibrium(self) -> bool:
        return math.isinf(self.gamma_tau)

    def with_probes(self, n_probes: int) -> "ProbeConfig":
        return ProbeConfig(n_probes, self.gamma_tau, self.energy_scale)

    def to_reduced(self, temperature):
        return np.asarray(temperature, dtype=float) / self.energy_scale

    def to_physical(self, t):
        return np.asarray(t, dtype=float) * self.energy_scale


def _result(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check_t(t, strict=False):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)):
        raise ValueError("temperature must not be NaN")
    if strict and np.any(t <= 0):
        raise ValueError("temperature must be > 0")
    if np.any(t < 0):
        raise ValueError("temperature must be >= 0")
    return t


def _thermalized_fraction(t, gamma_tau):
    """1 - exp(-gamma_tau * coth(1/2t)), the part of the way to Gibbs reached."""
    if gamma_tau == 0:
        return np.zeros_like(t)
    with np.errstate(divide="ignore", over="ignore"):
        coth = 1.0 / np.tanh(0.5 / t)
    return -np.expm1(-gamma_tau * coth)


def excitation_probability(t, cfg: ProbeConfig):
    """Excitation probability ``q_tau(t)`` of one probe after coupling.

    Exact limits: ``q(0) = 0`` and ``q(inf) = 1/2`` for any ``gamma_tau > 0``.
    """
    t = _check_t(t)
    with np.errstate(divide="ignore", over="ignore"):
        gibbs = expit(-1.0 / t)
    if cfg.is_equilibrium:
        return _result(gibbs)
    return _result(_thermalized_fraction(t, cfg.gamma_tau) * gibbs)


def log_excitation_probability(t, cfg: ProbeConfig):
    """Return ``(log q, log(1 - q))`` without underflow at small ``t``."""
    t = _check_t(t)
    with np.errstate(divide="ignore", over="ignore"):
        x = 1.0 / t
        log_q = -np.logaddexp(0.0, x)
        log_1mq = -np.logaddexp(0.0, -x)
        if not cfg.is_equilibrium:
            frac = _thermalized_fraction(t, cfg.gamma_tau)
            log_q = log_q + np.log(frac)
            log_1mq = np.log1p(-frac * expit(-x))
    return log_q, log_1mq


def excitation_probability_limit(cfg: ProbeConfig) -> float:
    """``q_tau(t -> inf)``: 1/2 for any nonzero coupling, 0 for ``gamma_tau = 0``."""
    return 0.0 if cfg.gamma_tau == 0 else 0.5


def excitation_probability_derivative(t, cfg: ProbeConfig):
    """Analytic ``d q_tau / d t``.

    With ``u = 1/2t``, ``q_tau = A(t) q_inf(t)`` where
    ``A = 1 - exp(-g coth u)``, ``A' = g exp(-g coth u) csch^2(u) / 2t^2`` and
    ``q_inf' = q_inf (1 - q_inf) / t^2``.
    """
    t = _check_t(t, strict=True)
    x = 1.0 / t
    gibbs_var = expit(-x) * expit(x)
    d_gibbs = gibbs_var * x * x
    if cfg.is_equilibrium:
        return _result(d_gibbs)
    g = cfg.gamma_tau
    if g == 0:
        return _result(np.zeros_like(t))
    u = 0.5 * x
    with np.errstate(over="ignore"):
        # csch^2(u) = 4 e^{-2u} / (1 - e^{-2u})^2, safe for large u
        e2u = np.exp(-2.0 * u)
        csch2 = 4.0 * e2u / (-np.expm1(-2.0 * u)) ** 2
        coth = 1.0 / np.tanh(u)
    d_frac = g * np.exp(-g * coth) * csch2 * 0.5 * x * x
    frac = _thermalized_fraction(t, g)
    return _result(d_frac * expit(-x) + frac * d_gibbs)


def log_binomial_coefficient(n_probes: int, n):
    n = np.asarray(n, dtype=float)
    return gammaln(n_probes + 1.0) - gammaln(n + 1.0) - gammaln(n_probes - n + 1.0)


def _xlog(n, log_p):
    # n * log p with the convention 0 * log 0 = 0
    with np.errstate(invalid="ignore"):
        out = n * log_p
    return np.where(n == 0, 0.0, out)


def log_likelihood(n, t, cfg: ProbeConfig):
    """``log P(n | t)`` of the Bernoulli chain; ``n`` and ``t`` broadcast."""
    n = np.asarray(n)
    if np.any((n < 0) | (n > cfg.n_probes)) or np.any(n != np.round(n)):
        raise ValueError(f"outcome n must be an integer in [0, {cfg.n_probes}]")
    log_q, log_1mq = log_excitation_probability(t, cfg)
    n = n.astype(float)
    return (
        log_binomial_coefficient(cfg.n_probes, n)
        + _xlog(n, log_q)
        + _xlog(cfg.n_probes - n, log_1mq)
    )


def likelihood(n, t, cfg: ProbeConfig):
    """Probability ``P(n | t) = C(N, n) q^n (1 - q)^(N - n)``."""
    return _result(np.exp(log_likelihood(n, t, cfg)))


def likelihood_vector(t: float, cfg: ProbeConfig) -> np.ndarray:
    """All ``N + 1`` outcome probabilities at a single temperature."""
    n = np.arange(cfg.n_probes + 1)
    if math.isinf(t):
        q = excitation_probability_limit(cfg)
        if q == 0:
            out = np.zeros(n.size)
            out[0] = 1.0
            return out
        return np.exp(log_binomial_coefficient(cfg.n_probes, n) + cfg.n_probes * math.log(q))
    return np.exp(log_likelihood(n, float(t), cfg))


def fisher_information(t, cfg: ProbeConfig):
    """Fisher information ``I(t) = N q'^2 / (q (1 - q))`` about ``t``.

    Raises for ``t <= 0``; the limit there is 0.
    """
    t = _check_t(t, strict=True)
    if cfg.is_equilibrium:
        x = 1.0 / t
        return _result(cfg.n_probes * expit(-x) * expit(x) * x**4)
    q = np.asarray(excitation_probability(t, cfg))
    dq = np.asarray(excitation_probability_derivative(t, cfg))
    with np.errstate(divide="ignore", invalid="ignore"):
        info = cfg.n_probes * dq * dq / (q * (1.0 - q))
    return _result(np.where(q > 0, info, 0.0))
