"""Which temperatures an N-probe measurement can tell apart from 0 and from infinity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .thermal_model import (
    ProbeConfig,
    excitation_probability,
    excitation_probability_limit,
    fisher_information,
)


class UndetectableError(ValueError):
    """The requested distinguishability cannot be reached at any temperature."""


@dataclass(frozen=True)
class DetectableRange:
    t0: float
    t_inf: float

    @property
    def ratio(self) -> float:
        return self.t_inf / self.t0


def _q(t, cfg):
    if math.isinf(t):
        return excitation_probability_limit(cfg)
    return float(excitation_probability(t, cfg))


def _xlog2(a, b):
    if a == 0:
        return 0.0
    if b == 0:
        return math.inf
    return a * math.log2(a / b)


def relative_entropy(t1: float, t2: float, cfg: ProbeConfig) -> float:
    """``D(t1 || t2)`` in bits between the outcome distributions at two temperatures.

    ``t = inf`` is accepted and means the high-temperature limit.  Returns
    ``inf`` when ``t2`` forbids an outcome that ``t1`` allows.
    """
    if t1 < 0 or t2 < 0:
        raise ValueError("temperatures must be >= 0")
    q1, q2 = _q(t1, cfg), _q(t2, cfg)
    d = _xlog2(q1, q2) + _xlog2(1.0 - q1, 1.0 - q2)
    return cfg.n_probes * max(d, 0.0)


def _solve_q(target: float, cfg: ProbeConfig, bracket=(0.01, 200.0), rtol=1e-8) -> float:
    """Temperature at which the (increasing) ``q_tau`` equals ``target``."""
    if not 0 < target < excitation_probability_limit(cfg):
        raise UndetectableError(
            f"target excitation probability {target:.6g} is outside the reachable range "
            f"[0, {excitation_probability_limit(cfg)})"
        )
    lo, hi = bracket
    while _q(lo, cfg) > target:
        lo /= 2.0
        if lo < 1e-300:
            raise UndetectableError("lower bracket collapsed")
    while _q(hi, cfg) < target:
        hi *= 2.0
        if hi > 1e300:
            raise UndetectableError(f"no temperature reaches q = {target:.6g}")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if _q(mid, cfg) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def detectable_range(cfg: ProbeConfig, threshold_bits: float = 1.0,
                     bracket=(0.01, 200.0)) -> DetectableRange:
    """``[t0, t_inf]`` where ``D(0||t0) = D(inf||t_inf) = threshold_bits``."""
    if cfg.gamma_tau == 0:
        raise UndetectableError("gamma_tau = 0: the probes never leave the ground state")
    n = cfg.n_probes
    q_low = -math.expm1(-threshold_bits * math.log(2) / n)
    q_high = 0.5 * (1.0 - math.sqrt(-math.expm1(-2.0 * threshold_bits * math.log(2) / n)))
    t0 = _solve_q(q_low, cfg, bracket)
    t_inf = _solve_q(q_high, cfg, bracket)
    return DetectableRange(t0, t_inf)


def peak_fisher(cfg: ProbeConfig, grid=None) -> tuple[float, float]:
    """(argmax, max) of the Fisher information over a log-spaced temperature grid."""
    t = np.geomspace(1e-3, 1e5, 40001) if grid is None else np.asarray(grid, dtype=float)
    info = np.asarray(fisher_information(t, cfg))
    i = int(np.argmax(info))
    return float(t[i]), float(info[i])


def peak_fisher_ratio(gamma_tau: float, cfg: ProbeConfig, grid=None) -> float:
    """``max_t I_tau(t) / max_t I_inf(t)`` at the probe number of ``cfg``."""
    probe = ProbeConfig(cfg.n_probes, gamma_tau, cfg.energy_scale)
    gibbs = ProbeConfig(cfg.n_probes, math.inf, cfg.energy_scale)
    return peak_fisher(probe, grid)[1] / peak_fisher(gibbs, grid)[1]
