"""Temperature priors: Jeffreys (from the probe likelihood), flat and 1/t."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .posterior import TemperatureGrid
from .thermal_model import (
    ProbeConfig,
    excitation_probability,
    excitation_probability_derivative,
)


class PriorKind(str, enum.Enum):
    JEFFREYS = "jeffreys"
    FLAT = "flat"
    RECIPROCAL = "reciprocal"


@dataclass(frozen=True)
class PriorSpec:
    """Prior family and support.  ``None`` bounds mean "the grid's bounds"."""

    kind: PriorKind = PriorKind.JEFFREYS
    t_min: float | None = None
    t_max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PriorKind(self.kind))
        lo, hi = self.t_min, self.t_max
        if self.kind is not PriorKind.JEFFREYS:
            if hi is not None and math.isinf(hi):
                raise ValueError(f"{self.kind.value} prior is improper on an infinite range")
        if lo is not None and not lo > 0:
            raise ValueError(f"prior t_min must be > 0, got {lo}")
        if lo is not None and hi is not None and not hi > lo:
            raise ValueError(f"prior t_max must exceed t_min, got [{lo}, {hi}]")


@dataclass(frozen=True, eq=False)
class PriorDensity:
    """A prior tabulated on a grid and normalized to unit quadrature mass.

    ``raw_mass`` is the quadrature mass of the analytic (unrestricted
    normalization) density on its support before renormalization; for
    Jeffreys it should equal :func:`truncated_mass` on that support.
    """

    spec: PriorSpec
    cfg: ProbeConfig
    grid: TemperatureGrid
    density: np.ndarray
    cumulative: np.ndarray
    support: tuple[float, float]
    raw_mass: float

    @property
    def key(self) -> tuple:
        return (self.spec.kind.value, self.support, self.cfg.gamma_tau, self.grid.key)

    def log_derivative(self) -> np.ndarray:
        """``d ln P0 / dt`` on the grid (``nan`` outside the support)."""
        t = self.grid.points
        inside = (t >= self.support[0]) & (t <= self.support[1])
        out = np.full(t.size, np.nan)
        if self.spec.kind is PriorKind.JEFFREYS:
            out[inside] = jeffreys_log_derivative(t[inside], self.cfg)
        elif self.spec.kind is PriorKind.FLAT:
            out[inside] = 0.0
        else:
            out[inside] = -1.0 / t[inside]
        return out


def jeffreys_density(t, cfg: ProbeConfig):
    """Jeffreys prior ``2 q' / (pi sqrt(q (1 - q)))``; independent of ``n_probes``.

    Raises for ``t <= 0`` (the limit there is 0).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("Jeffreys density is defined for t > 0")
    if cfg.is_equilibrium:
        q = np.asarray(excitation_probability(t, cfg))
        out = 2.0 * np.sqrt(q * (1.0 - q)) / (math.pi * t * t)
    else:
        q = np.asarray(excitation_probability(t, cfg))
        dq = np.asarray(excitation_probability_derivative(t, cfg))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2.0 * dq / (math.pi * np.sqrt(q * (1.0 - q)))
        out = np.where(q > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def jeffreys_log_derivative(t, cfg: ProbeConfig):
    """``d ln P0 / dt`` for the Jeffreys prior.

    At equilibrium this is ``(1 - 2q) / 2t^2 - 2/t``.  Otherwise
    ``q''/q' - q'(1 - 2q) / (2 q (1 - q))`` with ``q''`` from a central
    difference of the analytic ``q'`` (step ``1e-6 t``).
    """
    t = np.asarray(t, dtype=float)
    q = np.asarray(excitation_probability(t, cfg))
    if cfg.is_equilibrium:
        return (1.0 - 2.0 * q) / (2.0 * t * t) - 2.0 / t
    h = 1e-6 * t
    dq = np.asarray(excitation_probability_derivative(t, cfg))
    d2q = (np.asarray(excitation_probability_derivative(t + h, cfg))
           - np.asarray(excitation_probability_derivative(t - h, cfg))) / (2.0 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        return d2q / dq - 0.5 * dq * (1.0 - 2.0 * q) / (q * (1.0 - q))


def truncated_mass(t1: float, t2: float, cfg: ProbeConfig) -> float:
    """Jeffreys mass on ``[t1, t2]``: ``(4/pi) [asin sqrt q(t2) - asin sqrt q(t1)]``."""
    if t1 < 0 or t2 < t1:
        raise ValueError(f"invalid interval [{t1}, {t2}]")
    def asin_sqrt_q(t):
        if math.isinf(t):
            return math.asin(math.sqrt(0.0 if cfg.gamma_tau == 0 else 0.5))
        return math.asin(math.sqrt(excitation_probability(t, cfg)))
    return 4.0 / math.pi * (asin_sqrt_q(t2) - asin_sqrt_q(t1))


def build_prior(spec: PriorSpec, cfg: ProbeConfig, grid: TemperatureGrid) -> PriorDensity:
    """Tabulate ``spec`` on ``grid``, zero outside its support, unit mass inside."""
    lo = grid.t_min if spec.t_min is None else max(spec.t_min, grid.t_min)
    hi = grid.t_max if spec.t_max is None else min(spec.t_max, grid.t_max)
    if not hi > lo:
        raise ValueError(f"prior support [{lo}, {hi}] does not overlap the grid")
    t = grid.points
    inside = (t >= lo) & (t <= hi)
    raw = np.zeros(t.size)
    if spec.kind is PriorKind.JEFFREYS:
        raw[inside] = jeffreys_density(t[inside], cfg)
    elif spec.kind is PriorKind.FLAT:
        raw[inside] = 1.0 / (hi - lo)
    else:
        raw[inside] = 1.0 / (t[inside] * math.log(hi / lo))
    raw_mass = float(grid.integrate(raw))
    if not raw_mass > 0:
        raise ValueError("prior has zero mass on the grid")
    density = raw / raw_mass
    cumulative = grid.cumulative(density)
    density.flags.writeable = False
    cumulative.flags.writeable = False
    return PriorDensity(spec, cfg, grid, density, cumulative, (float(lo), float(hi)), raw_mass)
