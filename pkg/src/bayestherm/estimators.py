"""Point estimators, their matched error measures and credible intervals.

Every estimator is the minimizer of the posterior-averaged cost for one cost
function ``c(theta, t)``:

====  ===============  ========================  =========
label estimator        cost                      dimension
====  ===============  ========================  =========
md    posterior mode   -delta(theta - t)         (none)
1     median           abs(theta - t)            t
1r    relative median  abs(theta / t - 1)        1
2     mean             (theta - t)^2             t^2
2r    relative mean    (theta / t - 1)^2         1
2l    log mean         ln^2(theta / t)           1
====  ===============  ========================  =========
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .posterior import (
    Posterior,
    TemperatureGrid,
    log_posterior_rows,
    quantiles_from_cumulative,
    _LOG_EVIDENCE_FLOOR,
)

ABS_PREFACTOR = 4.12
SQUARE_PREFACTOR = 3.29


class EstimatorKind(str, enum.Enum):
    MODE = "md"
    MEDIAN = "1"
    RELATIVE_MEDIAN = "1r"
    MEAN = "2"
    RELATIVE_MEAN = "2r"
    LOG_MEAN = "2l"

    @classmethod
    def parse(cls, value) -> "EstimatorKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip())
        except ValueError:
            try:
                return cls[str(value).strip().upper()]
            except KeyError:
                labels = ", ".join(k.value for k in cls)
                raise ValueError(f"unknown estimator {value!r}; expected one of {labels}") from None

    @property
    def cost_unit(self) -> str | None:
        return _COST_UNITS[self]

    @property
    def cutoff_sensitive(self) -> bool:
        # the mean diverges with t_max; so do the errors eps(1) and eps(2)
        return self in (EstimatorKind.MEAN, EstimatorKind.MEDIAN)


_COST_UNITS = {
    EstimatorKind.MODE: None,
    EstimatorKind.MEDIAN: "t",
    EstimatorKind.RELATIVE_MEDIAN: "1",
    EstimatorKind.MEAN: "t^2",
    EstimatorKind.RELATIVE_MEAN: "1",
    EstimatorKind.LOG_MEAN: "1",
}

ALL_KINDS = tuple(EstimatorKind)
ERROR_KINDS = tuple(k for k in EstimatorKind if k is not EstimatorKind.MODE)


class UnsupportedEstimatorError(ValueError):
    """The mode has no matched error measure or finite cost."""


@dataclass(frozen=True)
class EstimateReport:
    kind: EstimatorKind
    estimate: float
    error: float | None
    q05: float
    q50: float
    q95: float
    cutoff_sensitive: bool

    @property
    def credible_width(self) -> float:
        return self.q95 - self.q05


def _normalize(rows, grid):
    return rows / (rows @ grid.weights)[:, None]


def _moments(rows, grid):
    t = grid.points
    w = grid.weights
    lt = np.log(t)
    basis = np.stack([w * t, w * t * t, w / t, w / (t * t), w * lt, w * lt * lt], axis=1)
    m = rows @ basis
    return dict(t=m[:, 0], t2=m[:, 1], inv=m[:, 2], inv2=m[:, 3], log=m[:, 4], log2=m[:, 5])


def _mode(rows, grid, refine=False):
    idx = np.argmax(rows, axis=1)
    t = grid.points
    theta = t[idx]
    if refine:
        inner = (idx > 0) & (idx < t.size - 1)
        r = np.arange(rows.shape[0])[inner]
        i = idx[inner]
        x0, x1, x2 = t[i - 1], t[i], t[i + 1]
        y0, y1, y2 = rows[r, i - 1], rows[r, i], rows[r, i + 1]
        num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
        den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
        with np.errstate(invalid="ignore", divide="ignore"):
            shift = np.where(den != 0, 0.5 * num / den, 0.0)
        theta = theta.copy()
        theta[inner] = x1 - shift
    return theta


def mean_costs(rows, grid, kind: EstimatorKind, theta, moments=None):
    """Posterior-averaged cost ``<c(theta, t)>`` of ``kind`` for each row.

    Square costs come from posterior moments; absolute costs need one pass.
    """
    t = grid.points
    if moments is None:
        moments = _moments(rows, grid)
    m = moments
    if kind is EstimatorKind.MODE:
        raise UnsupportedEstimatorError("the mode has a singular cost function")
    if kind is EstimatorKind.MEDIAN:
        return (np.abs(theta[:, None] - t[None, :]) * rows) @ grid.weights
    if kind is EstimatorKind.RELATIVE_MEDIAN:
        return (np.abs(theta[:, None] / t[None, :] - 1.0) * rows) @ grid.weights
    if kind is EstimatorKind.MEAN:
        return np.maximum(theta * theta - 2.0 * theta * m["t"] + m["t2"], 0.0)
    if kind is EstimatorKind.RELATIVE_MEAN:
        return relative_square_cost(theta, m)
    lt = np.log(theta)
    return np.maximum(lt * lt - 2.0 * lt * m["log"] + m["log2"], 0.0)


def relative_square_cost(theta, moments):
    """``<(theta/t - 1)^2>`` from the moments ``<1/t>``, ``<1/t^2>``."""
    m = moments
    return np.maximum(theta * theta * m["inv2"] - 2.0 * theta * m["inv"] + 1.0, 0.0)


def error_from_cost(kind: EstimatorKind, theta, cost):
    """Turn a posterior-averaged cost into a 90%-matched temperature error."""
    if kind is EstimatorKind.MODE:
        raise UnsupportedEstimatorError("the mode does not produce a meaningful error measure")
    if kind is EstimatorKind.MEDIAN:
        return ABS_PREFACTOR * cost
    if kind is EstimatorKind.RELATIVE_MEDIAN:
        return ABS_PREFACTOR * theta * cost
    if kind is EstimatorKind.MEAN:
        return SQUARE_PREFACTOR * np.sqrt(cost)
    if kind is EstimatorKind.RELATIVE_MEAN:
        return SQUARE_PREFACTOR * theta * np.sqrt(cost)
    return 2.0 * theta * np.sinh(0.5 * SQUARE_PREFACTOR * np.sqrt(cost))


def estimate_rows(rows, grid: TemperatureGrid, kinds=ALL_KINDS, refine_mode=False,
                  moments=None, cdf=None):
    """Estimates of each kind for each normalized density row."""
    if moments is None:
        moments = _moments(rows, grid)
    out = {}
    for kind in kinds:
        if kind is EstimatorKind.MODE:
            out[kind] = _mode(rows, grid, refine_mode)
        elif kind is EstimatorKind.MEAN:
            out[kind] = moments["t"]
        elif kind is EstimatorKind.RELATIVE_MEAN:
            out[kind] = moments["inv"] / moments["inv2"]
        elif kind is EstimatorKind.LOG_MEAN:
            out[kind] = np.exp(moments["log"])
        elif kind is EstimatorKind.MEDIAN:
            c = grid.cumulative(rows) if cdf is None else cdf
            out[kind] = quantiles_from_cumulative(grid, c, 0.5)[:, 0]
        else:
            tilted = _normalize(rows / grid.points[None, :], grid)
            out[kind] = quantiles_from_cumulative(grid, grid.cumulative(tilted), 0.5)[:, 0]
    return out


def estimate(kind, post: Posterior, refine_mode: bool = False) -> float:
    """Point estimate of ``kind`` from a posterior."""
    kind = EstimatorKind.parse(kind)
    rows = post.density[None, :]
    cdf = post.cumulative[None, :]
    return float(estimate_rows(rows, post.grid, (kind,), refine_mode, cdf=cdf)[kind][0])


def error(kind, post: Posterior, estimate_value: float | None = None) -> float:
    """Matched error of ``kind`` around ``estimate_value`` (default: its own estimate)."""
    kind = EstimatorKind.parse(kind)
    if kind is EstimatorKind.MODE:
        raise UnsupportedEstimatorError("the mode does not produce a meaningful error measure")
    if estimate_value is None:
        estimate_value = estimate(kind, post)
    rows = post.density[None, :]
    theta = np.array([float(estimate_value)])
    cost = mean_costs(rows, post.grid, kind, theta)
    return float(error_from_cost(kind, theta, cost)[0])


def credible_interval_90(post: Posterior) -> tuple[float, float]:
    q = quantiles_from_cumulative(post.grid, post.cumulative, [0.05, 0.95])[0]
    return float(q[0]), float(q[1])


def report(kind, post: Posterior, refine_mode: bool = False) -> EstimateReport:
    kind = EstimatorKind.parse(kind)
    theta = estimate(kind, post, refine_mode)
    err = None if kind is EstimatorKind.MODE else error(kind, post, theta)
    q05, q50, q95 = quantiles_from_cumulative(post.grid, post.cumulative, [0.05, 0.5, 0.95])[0]
    return EstimateReport(kind, theta, err, float(q05), float(q50), float(q95),
                          kind.cutoff_sensitive)


@dataclass(frozen=True, eq=False)
class OutcomeTable:
    """Per-outcome estimates for every ``n = 0..N`` under one prior and probe.

    Arrays are indexed by ``n``.  ``possible`` marks outcomes whose evidence is
    above the floor; everything else is ``nan`` there.
    """

    n_probes: int
    evidence: np.ndarray
    log_evidence: np.ndarray
    possible: np.ndarray
    estimates: dict
    errors: dict
    costs: dict
    relative_square_costs: dict
    q05: np.ndarray
    q50: np.ndarray
    q95: np.ndarray
    grid_key: tuple = ()

    @property
    def credible_width(self) -> np.ndarray:
        return self.q95 - self.q05


# rows x grid points handled per block
_BLOCK_ELEMENTS = 4_000_000
# posterior values below exp(-_WINDOW_DEPTH) of the peak are dropped
_WINDOW_DEPTH = 745.0


def tabulate_outcomes(prior, cfg, kinds=ALL_KINDS, refine_mode=False) -> OutcomeTable:
    """Build every posterior once and reduce it to estimates, errors and costs.

    Blocks of consecutive outcomes are processed together and cropped to the
    grid window where any of their posteriors is non-negligible.
    """
    kinds = tuple(EstimatorKind.parse(k) for k in kinds)
    grid = prior.grid
    n_out = cfg.n_probes + 1
    block = max(1, _BLOCK_ELEMENTS // grid.size)
    nan = lambda: np.full(n_out, np.nan)
    est = {k: nan() for k in kinds}
    err = {k: nan() for k in kinds if k is not EstimatorKind.MODE}
    cost = {k: nan() for k in kinds if k is not EstimatorKind.MODE}
    rsq = {k: nan() for k in kinds}
    q = np.full((n_out, 3), np.nan)
    log_ev = np.full(n_out, -np.inf)
    t_all, w_all = grid.points, grid.weights

    for start in range(0, n_out, block):
        ns = np.arange(start, min(start + block, n_out))
        log_post, lev = log_posterior_rows(ns, prior, cfg)
        log_ev[ns] = lev
        ok = lev > _LOG_EVIDENCE_FLOOR
        if not np.any(ok):
            continue
        ns, log_post = ns[ok], log_post[ok]
        live = np.any(log_post > log_post.max(axis=1, keepdims=True) - _WINDOW_DEPTH, axis=0)
        cols = np.flatnonzero(live)
        lo, hi = max(cols[0] - 1, 0), min(cols[-1] + 2, grid.size)
        sub = _SubGrid(t_all[lo:hi], grid, lo, hi)
        rows = np.exp(log_post[:, lo:hi])
        rows = _normalize(rows, sub)
        m = _moments(rows, sub)
        cdf = sub.cumulative(rows)
        cdf /= cdf[:, -1:]
        qs = quantiles_from_cumulative(sub, cdf, [0.05, 0.5, 0.95])
        q[ns] = qs
        ests = estimate_rows(rows, sub, kinds, refine_mode, moments=m, cdf=cdf)
        for k in kinds:
            theta = ests[k]
            est[k][ns] = theta
            rsq[k][ns] = relative_square_cost(theta, m)
            if k is not EstimatorKind.MODE:
                c = mean_costs(rows, sub, k, theta, moments=m)
                cost[k][ns] = c
                err[k][ns] = error_from_cost(k, theta, c)

    possible = log_ev > _LOG_EVIDENCE_FLOOR
    return OutcomeTable(
        n_probes=cfg.n_probes,
        evidence=np.exp(log_ev),
        log_evidence=log_ev,
        possible=possible,
        estimates=est,
        errors=err,
        costs=cost,
        relative_square_costs=rsq,
        q05=q[:, 0],
        q50=q[:, 1],
        q95=q[:, 2],
        grid_key=grid.key,
    )


class _SubGrid:
    """A contiguous slice of a grid, with trapezoid weights of the slice.

    The parent's weights are reused in the interior; the slice ends get the
    half-cell weights of their own endpoints, which is exact because the
    densities are negligible there.
    """

    def __init__(self, points, parent, lo, hi):
        self.points = points
        w = parent.weights[lo:hi].copy()
        dt = np.diff(parent.points)
        if lo > 0:
            w[0] = 0.5 * dt[lo]
        if hi < parent.size:
            w[-1] = 0.5 * dt[hi - 2]
        self.weights = w
        self.size = points.size

    cumulative = TemperatureGrid.cumulative
