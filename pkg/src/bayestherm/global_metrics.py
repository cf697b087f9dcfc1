"""Outcome- and temperature-averaged figures of merit and their lower bounds.

Everything here reduces an :class:`~bayestherm.estimators.OutcomeTable`.  The
table for a given (prior, probe) pair is built once and cached.
"""
from __future__ import annotations

import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    ALL_KINDS,
    SQUARE_PREFACTOR,
    EstimatorKind,
    OutcomeTable,
    UnsupportedEstimatorError,
    tabulate_outcomes,
)
from .posterior import TemperatureGrid, build_grid
from .priors import PriorDensity, PriorKind, PriorSpec, build_prior, jeffreys_density, truncated_mass
from .thermal_model import ProbeConfig, fisher_information, likelihood_vector

_CACHE_SIZE = 32
_tables: "OrderedDict[tuple, OutcomeTable]" = OrderedDict()


class BoundaryConditionWarning(UserWarning):
    """The prior does not vanish fast enough at the edges for the van Trees bound."""


def outcome_table(prior: PriorDensity, cfg: ProbeConfig) -> OutcomeTable:
    """Cached :func:`tabulate_outcomes` for all six estimators."""
    if prior.cfg.gamma_tau != cfg.gamma_tau:
        raise ValueError("prior was built for a different probe coupling")
    key = (prior.key, cfg.n_probes, cfg.gamma_tau)
    table = _tables.get(key)
    if table is None:
        table = tabulate_outcomes(prior, cfg, ALL_KINDS)
        _tables[key] = table
        while len(_tables) > _CACHE_SIZE:
            _tables.popitem(last=False)
    else:
        _tables.move_to_end(key)
    return table


def clear_cache() -> None:
    _tables.clear()


@dataclass(frozen=True)
class Cost:
    """A finite-range average cost tagged with its estimator and dimension.

    Ordering is only defined between costs of the same estimator: the cost
    functions live in different parametrizations of ``t``.
    """

    value: float
    kind: EstimatorKind
    unit: str

    def _check(self, other):
        if not isinstance(other, Cost):
            return NotImplemented
        if other.kind is not self.kind:
            raise TypeError(
                f"cannot compare cost of {self.kind.value!r} [{self.unit}] with "
                f"{other.kind.value!r} [{other.unit}]"
            )
        return None

    def __lt__(self, other):
        return self._check(other) or self.value < other.value

    def __le__(self, other):
        return self._check(other) or self.value <= other.value

    def __gt__(self, other):
        return self._check(other) or self.value > other.value

    def __ge__(self, other):
        return self._check(other) or self.value >= other.value

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class SweepResult:
    true_t: float
    mean_estimate: dict
    mean_error: dict
    rms: dict
    confidence: dict
    credible_width: float


@dataclass(frozen=True)
class VanTreesBound:
    bound: float
    fisher_term: float
    prior_term: float
    boundary_ok: bool = True

    def __float__(self):
        return float(self.bound)


@dataclass(frozen=True)
class GlobalResult:
    n_probes: int
    finite_cost: dict = field(default_factory=dict)
    relative_error: dict = field(default_factory=dict)
    rrms: dict = field(default_factory=dict)
    crb: float = math.nan
    van_trees_numeric: float = math.nan
    van_trees_equilibrium: float = math.nan


def _supported(kind):
    kind = EstimatorKind.parse(kind)
    if kind is EstimatorKind.MODE:
        raise UnsupportedEstimatorError("the mode has no error measure")
    return kind


def outcome_weights(true_t, cfg: ProbeConfig, table: OutcomeTable) -> np.ndarray:
    """``P(n | t)`` for each true temperature, impossible outcomes zeroed.

    Shape ``(len(true_t), N + 1)``.
    """
    ts = np.atleast_1d(np.asarray(true_t, dtype=float))
    p = np.stack([likelihood_vector(t, cfg) for t in ts])
    p[:, ~table.possible] = 0.0
    return p


def _weighted(p, values, possible):
    v = np.where(possible, values, 0.0)
    return p @ v


def averaged_estimate_and_error(true_t: float, kind, prior: PriorDensity, cfg: ProbeConfig):
    """Outcome-averaged estimate and matched error at one true temperature."""
    kind = _supported(kind)
    table = outcome_table(prior, cfg)
    p = outcome_weights(true_t, cfg, table)[0]
    return (float(_weighted(p, table.estimates[kind], table.possible)),
            float(_weighted(p, table.errors[kind], table.possible)))


def averaged_estimate(true_t: float, kind, prior: PriorDensity, cfg: ProbeConfig) -> float:
    kind = EstimatorKind.parse(kind)
    table = outcome_table(prior, cfg)
    p = outcome_weights(true_t, cfg, table)[0]
    return float(_weighted(p, table.estimates[kind], table.possible))


def rms_deviation(true_t: float, kind, prior: PriorDensity, cfg: ProbeConfig) -> float:
    """``3.29 sqrt(sum_n P(n|t) (theta_n - t)^2)``."""
    kind = EstimatorKind.parse(kind)
    table = outcome_table(prior, cfg)
    p = outcome_weights(true_t, cfg, table)[0]
    dev = (table.estimates[kind] - true_t) ** 2
    return float(SQUARE_PREFACTOR * math.sqrt(_weighted(p, dev, table.possible)))


def confidence_outcomes(p_row, level: float = 0.90) -> tuple[int, int]:
    """Outcome range ``(a, b)`` holding at least ``level`` of ``P(n | t)``.

    ``a`` is the largest ``n`` with ``P(n' <= n) <= (1 - level)/2`` (0 if none),
    ``b`` the smallest with ``P(n' <= n) >= (1 + level)/2``.  ``level = 1``
    returns the full support of ``p_row``.
    """
    if level >= 1.0:
        nz = np.flatnonzero(np.asarray(p_row) > 0)
        return int(nz[0]), int(nz[-1])
    cum = np.cumsum(p_row)
    lo_level, hi_level = 0.5 * (1.0 - level), 0.5 * (1.0 + level)
    below = np.flatnonzero(cum <= lo_level)
    a = int(below[-1]) if below.size else 0
    above = np.flatnonzero(cum >= hi_level * (1.0 - 1e-12))
    b = int(above[0]) if above.size else len(p_row) - 1
    return a, max(a, b)


def _confidence(p_row, estimates, possible, level):
    a, b = confidence_outcomes(p_row, level)
    sel = estimates[a:b + 1][possible[a:b + 1]]
    if sel.size == 0:
        return math.nan, math.nan
    return float(sel.min()), float(sel.max())


def confidence_interval(true_t: float, kind, level: float = 0.90,
                        prior: PriorDensity | None = None, cfg: ProbeConfig | None = None):
    """Range of estimates met in ``level`` of repeated runs at ``true_t``.

    ``a`` is the largest outcome with ``P(n <= a) <= (1 - level)/2`` and ``b``
    the smallest with ``P(n <= b) >= (1 + level)/2``; the interval is the min
    and max of the estimates over outcomes ``a..b``.
    """
    if not 0 < level <= 1:
        raise ValueError(f"level must be in (0, 1], got {level}")
    kind = EstimatorKind.parse(kind)
    table = outcome_table(prior, cfg)
    p = outcome_weights(true_t, cfg, table)[0]
    return _confidence(p, table.estimates[kind], table.possible, level)


def sweep(true_ts, prior: PriorDensity, cfg: ProbeConfig, kinds=ALL_KINDS,
          level: float = 0.90) -> list[SweepResult]:
    """Averaged estimates, errors, RMS deviations and confidence intervals.

    One :class:`SweepResult` per true temperature, in input order.
    """
    kinds = [EstimatorKind.parse(k) for k in kinds]
    table = outcome_table(prior, cfg)
    ts = np.atleast_1d(np.asarray(true_ts, dtype=float))
    p = outcome_weights(ts, cfg, table)
    poss = table.possible
    width = _weighted(p, table.credible_width, poss)
    mean = {k: _weighted(p, table.estimates[k], poss) for k in kinds}
    err = {k: (_weighted(p, table.errors[k], poss) if k in table.errors else np.full(ts.size, np.nan))
           for k in kinds}
    out = []
    for i, t in enumerate(ts):
        rms, conf = {}, {}
        for k in kinds:
            dev = (table.estimates[k] - t) ** 2
            rms[k] = float(SQUARE_PREFACTOR * math.sqrt(_weighted(p[i], dev, poss)))
            conf[k] = _confidence(p[i], table.estimates[k], poss, level)
        out.append(SweepResult(
            true_t=float(t),
            mean_estimate={k: float(mean[k][i]) for k in kinds},
            mean_error={k: float(err[k][i]) for k in kinds},
            rms=rms,
            confidence=conf,
            credible_width=float(width[i]),
        ))
    return out


def restricted_prior(prior: PriorDensity, t1: float, t2: float) -> PriorDensity:
    """The same prior family renormalized on ``[t1, t2]``, on a grid of equal resolution."""
    if not prior.grid.t_min <= t1 < t2 <= prior.grid.t_max:
        raise ValueError(f"[{t1}, {t2}] must lie inside the grid [{prior.grid.t_min}, {prior.grid.t_max}]")
    grid = prior.grid.restrict(t1, t2)
    lo = t1 if prior.spec.t_min is None else max(t1, prior.spec.t_min)
    hi = t2 if prior.spec.t_max is None else min(t2, prior.spec.t_max)
    return build_prior(PriorSpec(prior.spec.kind, lo, hi), prior.cfg, grid)


def _total(table: OutcomeTable, values) -> float:
    ok = table.possible
    return float(np.sum(table.evidence[ok] * values[ok]))


def finite_cost(kind, prior: PriorDensity, cfg: ProbeConfig, t1: float, t2: float) -> Cost:
    """Prior-averaged cost of ``kind`` on ``[t1, t2]`` with the prior renormalized there."""
    kind = _supported(kind)
    table = outcome_table(restricted_prior(prior, t1, t2), cfg)
    return Cost(_total(table, table.costs[kind]), kind, kind.cost_unit)


def global_relative_error(kind, prior: PriorDensity, cfg: ProbeConfig,
                          t1: float, t2: float) -> float:
    """``sum_n P(n) eps_n / theta_n`` with posteriors restricted to ``[t1, t2]``."""
    kind = _supported(kind)
    table = outcome_table(restricted_prior(prior, t1, t2), cfg)
    return _total(table, table.errors[kind] / table.estimates[kind])


def global_crb(cfg: ProbeConfig, t1: float, t2: float, grid: TemperatureGrid | None = None,
               numeric: bool | None = None) -> float:
    """Jeffreys-averaged relative Cramer-Rao error ``3.29 / (t sqrt(I))`` on ``[t1, t2]``.

    Closed form at equilibrium, quadrature otherwise (or when ``numeric``).
    """
    mass = truncated_mass(t1, t2, cfg)
    if numeric is None:
        numeric = not cfg.is_equilibrium
    if not numeric:
        return 2.0 * SQUARE_PREFACTOR * math.log(t2 / t1) / (math.pi * math.sqrt(cfg.n_probes) * mass)
    g = grid.restrict(t1, t2) if grid is not None else build_grid(t1, t2, step=1e-3)
    t = g.points
    info = np.asarray(fisher_information(t, cfg))
    with np.errstate(divide="ignore"):
        integrand = np.where(info > 0, jeffreys_density(t, cfg) * SQUARE_PREFACTOR / (t * np.sqrt(info)), 0.0)
    return float(g.integrate(integrand)) / mass


def prior_boundary_ok(prior: PriorDensity, tol: float = 1e-2) -> bool:
    """``t P0(t)`` small at both support edges (the van Trees boundary terms)."""
    t = prior.grid.points
    inside = np.flatnonzero(prior.density > 0)
    lo, hi = inside[0], inside[-1]
    return bool(t[lo] * prior.density[lo] <= tol and t[hi] * prior.density[hi] <= tol)


def van_trees_bound(cfg: ProbeConfig, prior: PriorDensity) -> VanTreesBound:
    """Lower bound on the global relative RMS error from the modified van Trees inequality.

    ``3.29 / sqrt(int P0 t^2 I dt + I0)``, ``I0 = int P0 t^2 (d ln P0/dt)^2 dt``,
    both by quadrature over the prior's grid.
    """
    t = prior.grid.points
    dens = prior.density
    inside = dens > 0
    info = np.asarray(fisher_information(t, cfg))
    fisher_term = float(prior.grid.integrate(dens * t * t * info))
    dlog = np.where(inside, prior.log_derivative(), 0.0)
    prior_term = float(prior.grid.integrate(np.where(inside, dens * t * t * dlog * dlog, 0.0)))
    ok = prior_boundary_ok(prior)
    if not ok:
        warnings.warn(
            f"{prior.spec.kind.value} prior does not vanish at the edges of its support; "
            "the van Trees bound is not guaranteed",
            BoundaryConditionWarning, stacklevel=2,
        )
    return VanTreesBound(SQUARE_PREFACTOR / math.sqrt(fisher_term + prior_term),
                         fisher_term, prior_term, ok)


def van_trees_equilibrium(n_probes: int) -> tuple[float, float]:
    """Closed-form equilibrium bound and its printed approximation ``6.81/sqrt(N + 9.56)``."""
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    exact = SQUARE_PREFACTOR / math.sqrt((n_probes + 1) * math.pi**2 / 8 - n_probes + 1)
    return exact, 6.81 / math.sqrt(n_probes + 9.56)


def global_rrms(kind, prior: PriorDensity, cfg: ProbeConfig) -> float:
    """``3.29 sqrt(C_2r)`` of ``kind`` over the prior's whole support."""
    kind = EstimatorKind.parse(kind)
    table = outcome_table(prior, cfg)
    return SQUARE_PREFACTOR * math.sqrt(_total(table, table.relative_square_costs[kind]))


def global_result(cfg: ProbeConfig, prior: PriorDensity, t1: float, t2: float,
                  kinds=None, with_rrms: bool = False) -> GlobalResult:
    """All global figures of merit at one probe number."""
    kinds = [EstimatorKind.parse(k) for k in (kinds or ALL_KINDS)]
    supported = [k for k in kinds if k is not EstimatorKind.MODE]
    vt = van_trees_bound(cfg, prior) if prior.spec.kind is PriorKind.JEFFREYS else None
    return GlobalResult(
        n_probes=cfg.n_probes,
        finite_cost={k: finite_cost(k, prior, cfg, t1, t2) for k in supported},
        relative_error={k: global_relative_error(k, prior, cfg, t1, t2) for k in supported},
        rrms={k: global_rrms(k, prior, cfg) for k in kinds} if with_rrms else {},
        crb=global_crb(cfg, t1, t2, prior.grid),
        van_trees_numeric=vt.bound if vt is not None else math.nan,
        van_trees_equilibrium=van_trees_equilibrium(cfg.n_probes)[0] if cfg.is_equilibrium else math.nan,
    )
