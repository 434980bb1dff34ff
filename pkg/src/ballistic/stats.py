"""Monte Carlo estimates: densities, survival probabilities, exponents, sweeps.

Every replica is a deterministic function of ``(seed, grid index, replica
index)`` and results are aggregated in replica order, so the output does not
depend on how many worker processes are used.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps
from scipy.special import gamma

from .engine import resolve_fast
from .model import Domain, Seed, SpeedLaw, _sample, three_speed

__all__ = [
    "DensityCurve",
    "InsufficientPoints",
    "NonpositiveDensity",
    "SurvivalEstimate",
    "SweepResult",
    "Unavailable",
    "UnsafeHorizon",
    "WindowExhausted",
    "default_horizon",
    "estimate_density",
    "estimate_survival",
    "fit_exponent",
    "geometric_times",
    "moving_class_candidates",
    "reference_density",
    "survival_curve",
    "sweep",
    "wilson_interval",
]

CRITICAL_P = 0.25
CRITICAL_ROUTING_TOL = 1e-6
Z_95 = float(sps.norm.ppf(0.975))


class WindowExhausted(ValueError):
    pass


class UnsafeHorizon(ValueError):
    pass


class Unavailable(LookupError):
    """No closed-form reference is known for this regime and class."""


class InsufficientPoints(ValueError):
    pass


class NonpositiveDensity(ValueError):
    pass


def geometric_times(t_lo: float, t_hi: float, per_decade: int = 20) -> np.ndarray:
    """Log-spaced grid from ``t_lo`` to ``t_hi`` inclusive."""
    if not 0 < t_lo <= t_hi:
        raise ValueError("need 0 < t_lo <= t_hi")
    count = max(2, int(round(per_decade * math.log10(t_hi / t_lo))) + 1)
    return np.geomspace(t_lo, t_hi, count)


def default_horizon(n: int, v_max: float) -> float:
    """Origin-safe horizon for ``n`` particles per side.

    Half the expected extent, less five standard deviations of the extent so
    that a sampled system falls short of it with negligible probability.
    """
    return (n - 5.0 * math.sqrt(n)) / (2.0 * v_max)


def _map(fn: Callable, tasks: Sequence, parallelism: int) -> list:
    if parallelism <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * parallelism))))


# -- densities ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityCurve:
    """Alive density per speed class on a time grid.

    ``per_replica[r, c, k]`` is the fraction of particles started inside the
    replica's window that have speed class ``c`` and are alive at
    ``times[k]``; at unit intensity this estimates the density per unit length.
    """

    times: np.ndarray
    classes: tuple[float, ...]
    per_replica: np.ndarray
    window_half_width: float

    @property
    def replicas(self) -> int:
        return self.per_replica.shape[0]

    @property
    def estimate(self) -> np.ndarray:
        return self.per_replica.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        if self.replicas < 2:
            return np.full(self.estimate.shape, np.nan)
        return self.per_replica.std(axis=0, ddof=1) / math.sqrt(self.replicas)

    def class_index(self, cls: float) -> int:
        for k, c in enumerate(self.classes):
            if c == cls:
                return k
        raise KeyError(f"no speed class {cls!r}; classes are {self.classes}")

    @property
    def per_class(self) -> dict[float, tuple[np.ndarray, np.ndarray, int]]:
        est, err = self.estimate, self.stderr
        return {c: (est[k], err[k], self.replicas) for k, c in enumerate(self.classes)}

    def rows(self):
        """``(t, class, estimate, stderr, replicas)`` in time-major order."""
        est, err = self.estimate, self.stderr
        for k, t in enumerate(self.times):
            for c, cls in enumerate(self.classes):
                yield float(t), cls, float(est[c, k]), float(err[c, k]), self.replicas


def _class_edges(law: SpeedLaw, bins: int) -> tuple[tuple[float, ...], np.ndarray | None]:
    if law.is_discrete:
        return tuple(float(s) for s in law.speeds), None
    lo, hi = law.uniform
    edges = np.linspace(lo, hi, bins + 1)
    centers = tuple(float(c) for c in 0.5 * (edges[:-1] + edges[1:]))
    return centers, edges


@dataclass(frozen=True)
class _DensityTask:
    law: SpeedLaw
    n: int
    times: np.ndarray
    seed: Seed
    grid_index: int
    replica: int
    bins: int


def _density_replica(task: _DensityTask) -> tuple[np.ndarray, float]:
    law = task.law
    sys = _sample(law, Domain.FULL, task.n, task.seed.sequence(task.grid_index, task.replica))
    outcome = resolve_fast(sys)
    width = sys.half_extent - 2.0 * law.v_max * float(task.times[-1])
    if width <= 0:
        raise WindowExhausted(
            f"t={task.times[-1]!r} leaves no light-cone-safe window "
            f"(half extent {sys.half_extent:.6g}, v_max {law.v_max})")
    inside = np.abs(sys.positions) < width
    total = int(np.count_nonzero(inside))
    classes, edges = _class_edges(law, task.bins)
    v = sys.speeds[inside]
    death = outcome.death_time[inside]
    if edges is None:
        label = np.searchsorted(law.speeds, v)
    else:
        label = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, task.bins - 1)
    out = np.empty((len(classes), task.times.size))
    for c in range(len(classes)):
        d = np.sort(death[label == c])
        out[c] = (d.size - np.searchsorted(d, task.times, side="right")) / total
    return out, width


def estimate_density(law: SpeedLaw, n: int, times: Sequence[float], replicas: int,
                     seed: Seed, *, bins: int = 4, grid_index: int = 0,
                     parallelism: int = 1) -> DensityCurve:
    """Alive density per speed class on full-line Palm samples.

    Each replica counts the particles that started within distance
    ``half_extent - 2 * v_max * max(times)`` of the origin.  Over ``[0, t]``
    such a particle stays where the missing exterior of the sample cannot have
    reached, so its fate is that of the infinite system, and the alive counts
    are non-increasing in ``t``.  Continuous laws are split into ``bins``
    equal-width speed classes labelled by their centres.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a nonempty increasing sequence of nonnegative values")
    if replicas < 1:
        raise ValueError("replicas must be positive")
    if 2.0 * law.v_max * times[-1] >= n:
        raise WindowExhausted(f"t={times[-1]!r} exceeds the safe range for n={n}")
    tasks = [_DensityTask(law, int(n), times, seed, grid_index, r, bins) for r in range(replicas)]
    results = _map(_density_replica, tasks, parallelism)
    per_replica = np.stack([r[0] for r in results])
    width = float(np.mean([r[1] for r in results]))
    classes, _ = _class_edges(law, bins)
    return DensityCurve(times, classes, per_replica, width)


def reference_density(p: float, t: float, cls: float = 0.0) -> float:
    """Quoted large-time asymptotics for the symmetric three-speed law.

    Below ``p = 1/4`` the zero class decays like ``2p / ((1 - 4p) pi) / t``
    and the moving classes like ``sqrt((1/4 - p) / pi) / sqrt(t)``; at
    ``p = 1/4`` (and within 1e-6 of it) both decay like ``t**(-2/3)`` with
    Gamma-function prefactors; above it the zero class tends to the constant
    ``2 - 1/sqrt(p)`` and the moving classes raise :class:`Unavailable`.

    The quoted moving-class law below 1/4 comes with two exponents; this uses
    ``t**-1/2``, the one simulations support.  :func:`moving_class_candidates`
    returns both.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if t <= 0:
        raise ValueError("t must be positive")
    if cls not in (-1.0, 0.0, 1.0):
        raise ValueError(f"speed class must be -1, 0 or +1, got {cls!r}")
    g23 = gamma(2.0 / 3.0)
    if abs(p - CRITICAL_P) <= CRITICAL_ROUTING_TOL:
        if cls == 0:
            return 2.0 ** (2.0 / 3.0) / (4.0 * g23 ** 2) * t ** (-2.0 / 3.0)
        prefactor = 2.0 ** (2.0 / 3.0) / (8.0 * g23 ** 2) + 3.0 / (8.0 * gamma(1.0 / 3.0))
        return prefactor * t ** (-2.0 / 3.0)
    if p < CRITICAL_P:
        if cls == 0:
            return 2.0 * p / ((1.0 - 4.0 * p) * math.pi) / t
        return moving_class_candidates(p, t)["t^-1/2"]
    if cls == 0:
        return 2.0 - 1.0 / math.sqrt(p)
    raise Unavailable("moving-class decay above p=1/4 has no quoted constants")


def moving_class_candidates(p: float, t: float) -> dict[str, float]:
    """Both readings of the moving-class asymptotics below ``p = 1/4``."""
    if not 0.0 <= p < CRITICAL_P:
        raise ValueError("defined for p < 1/4")
    prefactor = math.sqrt((CRITICAL_P - p) / math.pi)
    return {"t^-1": prefactor / t, "t^-1/2": prefactor / math.sqrt(t)}


def fit_exponent(curve: DensityCurve, cls: float, t_lo: float, t_hi: float) -> tuple[float, float]:
    """Least-squares slope of log density against log time on ``[t_lo, t_hi]``."""
    sel = (curve.times >= t_lo) & (curve.times <= t_hi)
    if np.count_nonzero(sel) < 3:
        raise InsufficientPoints(f"only {np.count_nonzero(sel)} grid points in [{t_lo}, {t_hi}]")
    y = curve.estimate[curve.class_index(cls), sel]
    if np.any(y <= 0):
        raise NonpositiveDensity(f"class {cls!r} has nonpositive estimates in the fit range")
    fit = sps.linregress(np.log(curve.times[sel]), np.log(y))
    return float(fit.slope), float(fit.stderr)


# -- survival ----------------------------------------------------------------

def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class SurvivalEstimate:
    p_hat: float
    ci_lo: float
    ci_hi: float
    horizon: float
    replicas: int
    survivors: int = field(default=0, compare=False)


@dataclass(frozen=True)
class _SurvivalTask:
    law: SpeedLaw
    domain: Domain
    v0: float | None
    n: int
    horizons: tuple[float, ...]
    seed: Seed
    grid_index: int
    replica: int


def _survival_replica(task: _SurvivalTask) -> np.ndarray:
    sys = _sample(task.law, task.domain, task.n, task.seed.sequence(task.grid_index, task.replica))
    v_max = task.law.v_max
    if task.v0 is not None:
        speeds = sys.speeds.copy()
        speeds[sys.origin] = task.v0
        sys = sys.with_speeds(speeds)
        v_max = max(v_max, abs(task.v0))
    safe = sys.half_extent / (2.0 * v_max) if v_max > 0 else math.inf
    if max(task.horizons) > safe:
        raise UnsafeHorizon(f"horizon {max(task.horizons)!r} exceeds the safe horizon "
                            f"{safe:.6g} of replica {task.replica}")
    death = resolve_fast(sys).death_time[sys.origin]
    return death > np.asarray(task.horizons)


def _survival_counts(law, domain, v0, n, horizons, replicas, seed, grid_index, parallelism):
    if replicas < 1:
        raise ValueError("replicas must be positive")
    domain = Domain.parse(domain)
    tasks = [_SurvivalTask(law, domain, None if v0 is None else float(v0), int(n),
                           tuple(float(h) for h in horizons), seed, grid_index, r)
             for r in range(replicas)]
    return np.sum(_map(_survival_replica, tasks, parallelism), axis=0)


def _make_estimate(alive: int, horizon: float, replicas: int) -> SurvivalEstimate:
    lo, hi = wilson_interval(int(alive), replicas)
    p_hat = alive / replicas
    return SurvivalEstimate(p_hat, min(lo, p_hat), max(hi, p_hat), float(horizon), replicas,
                            int(alive))


def estimate_survival(law: SpeedLaw, domain: Domain | str, v0: float | None, n: int,
                      horizon: float | None, replicas: int, seed: Seed, *,
                      grid_index: int = 0, parallelism: int = 1) -> SurvivalEstimate:
    """Fraction of replicas whose origin particle is alive at ``horizon``.

    ``v0`` forces the origin particle's speed (``None`` leaves it random).  The
    horizon must not exceed half the sampled extent divided by ``v_max`` in any
    replica; ``None`` picks :func:`default_horizon`.
    """
    if horizon is None:
        horizon = default_horizon(n, max(law.v_max, abs(v0 or 0.0)))
    alive = _survival_counts(law, domain, v0, n, (horizon,), replicas, seed, grid_index,
                             parallelism)
    return _make_estimate(int(alive[0]), horizon, replicas)


def survival_curve(law: SpeedLaw, domain: Domain | str, v0: float | None, n: int,
                   horizons: Sequence[float], replicas: int, seed: Seed, *,
                   grid_index: int = 0, parallelism: int = 1) -> list[SurvivalEstimate]:
    """:func:`estimate_survival` at several horizons on the same replicas.

    Each entry equals the single-horizon call with the same arguments.
    """
    alive = _survival_counts(law, domain, v0, n, horizons, replicas, seed, grid_index,
                             parallelism)
    return [_make_estimate(int(a), h, replicas) for a, h in zip(alive, horizons)]


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    p: float
    survival: SurvivalEstimate
    exponent: float
    exponent_stderr: float
    runtime: float = field(compare=False)


@dataclass(frozen=True)
class SweepResult:
    grid: tuple[float, ...]
    per_point: tuple[SweepPoint, ...]

    def rows(self):
        """``(p, survival, ci_lo, ci_hi, exponent, exp_stderr)`` per grid point."""
        for pt in self.per_point:
            s = pt.survival
            yield pt.p, s.p_hat, s.ci_lo, s.ci_hi, pt.exponent, pt.exponent_stderr

    def crossover(self) -> float | None:
        """Smallest grid value whose survival interval excludes zero."""
        for pt in self.per_point:
            if pt.survival.ci_lo > 0 and pt.survival.survivors > 0:
                return pt.p
        return None


def sweep(grid: Sequence[float], n: int, horizon: float | None, replicas: int, seed: Seed,
          parallelism: int = 1, *, density_replicas: int | None = None,
          times: Sequence[float] | None = None,
          fit_range: tuple[float, float] | None = None) -> SweepResult:
    """Survival of a zero-speed origin and the zero-class decay exponent
    across a grid of three-speed laws.

    Grid point ``g`` uses replica streams keyed by ``(seed, g, r)``, so the
    first point reproduces a direct :func:`estimate_survival` call.  Density
    times default to a geometric grid up to a quarter of the horizon and the
    exponent is fitted over its last two decades.
    """
    grid = tuple(float(p) for p in grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    if horizon is None:
        horizon = default_horizon(n, 1.0)
    if times is None:
        times = geometric_times(1.0, max(1.0, horizon / 4))
    times = np.asarray(times, dtype=float)
    if fit_range is None:
        fit_range = (max(times[0], times[-1] / 100), times[-1])
    density_replicas = density_replicas or min(replicas, 8)
    points = []
    for g, p in enumerate(grid):
        started = time.perf_counter()
        law = three_speed(p)
        surv = estimate_survival(law, Domain.FULL, 0.0, n, horizon, replicas, seed,
                                 grid_index=g, parallelism=parallelism)
        curve = estimate_density(law, n, times, density_replicas, seed, grid_index=g,
                                 parallelism=parallelism)
        try:
            slope, err = fit_exponent(curve, 0.0, *fit_range)
        except NonpositiveDensity:
            slope, err = math.nan, math.nan
        points.append(SweepPoint(p, surv, slope, err, time.perf_counter() - started))
    return SweepResult(grid, tuple(points))
