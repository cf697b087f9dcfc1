"""Temperature grids, Bayes updates and posterior quantiles.

Integrals are trapezoid sums on the grid; cumulative distributions are the
running trapezoid sums, and quantiles interpolate them linearly inside a cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .thermal_model import ProbeConfig, log_likelihood

#: P(n) below this is treated as an impossible outcome.
EVIDENCE_FLOOR = 1e-300
_LOG_EVIDENCE_FLOOR = math.log(EVIDENCE_FLOOR)


class ImpossibleOutcomeError(ValueError):
    """Raised when an outcome has (numerically) zero evidence."""


@dataclass(frozen=True, eq=False)
class TemperatureGrid:
    points: np.ndarray
    weights: np.ndarray
    step: float | None = None
    log_points: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        pts.flags.writeable = False
        w = np.asarray(self.weights, dtype=float)
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def t_min(self) -> float:
        return float(self.points[0])

    @property
    def t_max(self) -> float:
        return float(self.points[-1])

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def key(self) -> tuple:
        return (self.t_min, self.t_max, self.step, self.log_points, self.size)

    def integrate(self, values, axis=-1):
        return np.tensordot(values, self.weights, axes=([axis], [0]))

    def cumulative(self, values):
        """Running trapezoid integral along the last axis, starting at 0."""
        values = np.asarray(values, dtype=float)
        dt = np.diff(self.points)
        cells = 0.5 * (values[..., 1:] + values[..., :-1]) * dt
        out = np.zeros_like(values)
        np.cumsum(cells, axis=-1, out=out[..., 1:])
        return out

    def restrict(self, t1: float, t2: float) -> "TemperatureGrid":
        """A grid on ``[t1, t2]`` with the same resolution as this one."""
        if self.step is not None:
            return build_grid(t1, t2, step=self.step)
        per_decade = (self.size - 1) / math.log10(self.t_max / self.t_min)
        n = max(2, int(round(per_decade * math.log10(t2 / t1))) + 1)
        return build_grid(t1, t2, log_points=n)


def _trapezoid_weights(points):
    dt = np.diff(points)
    w = np.zeros(points.size)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def build_grid(t_min: float, t_max: float, step: float | None = None,
               log_points: int | None = None) -> TemperatureGrid:
    """Uniform grid of spacing ``step`` (default) or ``log_points`` log-spaced points.

    If ``(t_max - t_min) / step`` is not an integer the last cell is shorter so
    that ``t_max`` is always a grid point.
    """
    if not (0 < t_min < t_max) or not math.isfinite(t_max):
        raise ValueError(f"degenerate grid range [{t_min}, {t_max}]")
    if log_points is not None:
        if step is not None:
            raise ValueError("give either step or log_points, not both")
        if log_points < 2:
            raise ValueError("log_points must be >= 2")
        pts = np.geomspace(t_min, t_max, int(log_points))
        pts[0], pts[-1] = t_min, t_max
        return TemperatureGrid(pts, _trapezoid_weights(pts), log_points=int(log_points))
    if step is None:
        step = 1e-3
    if not step > 0:
        raise ValueError(f"grid step must be > 0, got {step}")
    cells = (t_max - t_min) / step
    n_cells = int(math.floor(cells + 1e-9))
    if n_cells < 1:
        raise ValueError(f"grid step {step} exceeds range [{t_min}, {t_max}]")
    if abs(cells - round(cells)) < 1e-9 * max(1.0, cells):
        pts = np.linspace(t_min, t_max, n_cells + 1)
    else:
        pts = np.append(t_min + step * np.arange(n_cells + 1), t_max)
    return TemperatureGrid(pts, _trapezoid_weights(pts), step=float(step))


def quantiles_from_cumulative(grid: TemperatureGrid, cdf: np.ndarray, p) -> np.ndarray:
    """Linear-interpolation quantiles for each row of ``cdf`` (normalized to 1)."""
    cdf = np.atleast_2d(cdf)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    t = grid.points
    rows = np.arange(cdf.shape[0])
    out = np.empty((cdf.shape[0], p.size))
    for j, pj in enumerate(p):
        idx = np.count_nonzero(cdf < pj, axis=1)
        idx = np.clip(idx, 1, t.size - 1)
        lo = cdf[rows, idx - 1]
        hi = cdf[rows, idx]
        span = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(span > 0, (pj - lo) / span, 0.0)
        frac = np.clip(frac, 0.0, 1.0)
        out[:, j] = t[idx - 1] + frac * (t[idx] - t[idx - 1])
    return out


@dataclass(frozen=True, eq=False)
class Posterior:
    """Normalized posterior density for one outcome on a grid."""

    grid: TemperatureGrid
    density: np.ndarray
    n: int | None = None
    evidence: float = 1.0
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dens = np.asarray(self.density, dtype=float)
        if dens.shape != self.grid.points.shape:
            raise ValueError("density must match the grid")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ValueError("density must be finite and nonnegative")
        mass = self.grid.integrate(dens)
        if not mass > 0:
            raise ValueError("density has zero mass")
        dens = dens / mass
        dens.flags.writeable = False
        cdf = self.grid.cumulative(dens)
        cdf.flags.writeable = False
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "cumulative", cdf)

    @classmethod
    def from_density(cls, grid: TemperatureGrid, density) -> "Posterior":
        """Wrap an arbitrary nonnegative density (normalized on construction)."""
        return cls(grid, density)

    def cdf(self, theta):
        return np.interp(theta, self.grid.points, self.cumulative)


def log_posterior_rows(outcomes, prior, cfg: ProbeConfig):
    """Unnormalized log posteriors and log evidences for a block of outcomes.

    Returns ``(log_post, log_evidence)``; each row of ``exp(log_post)`` is the
    posterior density already normalized to unit quadrature mass.  Rows with
    zero evidence are left as ``-inf``.
    """
    grid = prior.grid
    n = np.asarray(outcomes)[:, None]
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior.density)
    log_post = log_likelihood(n, grid.points[None, :], cfg) + log_prior[None, :]
    peak = log_post.max(axis=1)
    ok = np.isfinite(peak)
    log_post[ok] -= peak[ok, None]
    with np.errstate(divide="ignore"):
        log_mass = np.log(np.exp(log_post) @ grid.weights)
    log_ev = np.where(ok, peak + log_mass, -np.inf)
    log_post[ok] -= log_mass[ok, None]
    return log_post, log_ev


def posterior(n: int, prior, cfg: ProbeConfig, grid: TemperatureGrid | None = None) -> Posterior:
    """Bayes update of ``prior`` after observing ``n`` excited probes."""
    if grid is not None and grid is not prior.grid:
        raise ValueError("prior was tabulated on a different grid")
    if int(n) != n or not 0 <= n <= cfg.n_probes:
        raise ValueError(f"outcome n must be an integer in [0, {cfg.n_probes}], got {n}")
    log_post, log_ev = log_posterior_rows([int(n)], prior, cfg)
    if not log_ev[0] > _LOG_EVIDENCE_FLOOR:
        raise ImpossibleOutcomeError(f"outcome n={n} has evidence below {EVIDENCE_FLOOR:g}")
    return Posterior(prior.grid, np.exp(log_post[0]), n=int(n), evidence=float(np.exp(log_ev[0])))


def evidences(prior, cfg: ProbeConfig, chunk: int = 64) -> np.ndarray:
    """``P(n)`` for every outcome ``n = 0..N``."""
    out = np.empty(cfg.n_probes + 1)
    for start in range(0, cfg.n_probes + 1, chunk):
        block = np.arange(start, min(start + chunk, cfg.n_probes + 1))
        out[block] = np.exp(log_posterior_rows(block, prior, cfg)[1])
    return out


def quantile(p: float, post: Posterior) -> float:
    """Temperature at which the posterior cumulative reaches ``p``."""
    if not 0 < p < 1:
        raise ValueError(f"quantile level must be in (0, 1), got {p}")
    return float(quantiles_from_cumulative(post.grid, post.cumulative, p)[0, 0])


def posterior_expectation(f, post: Posterior) -> float:
    """Quadrature of ``f(t) * density(t)``; ``f`` is called once on the grid."""
    values = np.asarray(f(post.grid.points), dtype=float)
    if values.ndim == 0:
        values = np.full(post.grid.size, float(values))
    return float(post.grid.integrate(values * post.density))
