"""Exact resolution of the annihilation dynamics.

Two resolvers share one output type: :func:`resolve_oracle`, a quadratic
brute-force replay of the chronologically first collision, and
:func:`resolve_fast`, an event-driven resolver running in O(N log N).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._kernels import STATUS_OK, resolve
from .model import Domain, ParticleSystem

__all__ = [
    "Alive",
    "Annihilated",
    "ExactTie",
    "Outcome",
    "StartCoincidence",
    "alive_at",
    "check_outcome",
    "crossings_of_zero",
    "pairs_over",
    "resolve_fast",
    "resolve_oracle",
]

POSITION_RTOL = 1e-9


class ExactTie(RuntimeError):
    """Two candidate collisions sharing a particle have the same float time.

    This is a triple collision, whose outcome the dynamics leave undefined.
    """

    def __init__(self, time: float, first: tuple[int, int], second: tuple[int, int]):
        super().__init__(f"exact collision-time tie at t={time!r} between pairs "
                         f"{first} and {second}")
        self.time = time
        self.pairs = (first, second)


class StartCoincidence(ValueError):
    """A query point coincides with a starting position."""


class Alive(NamedTuple):
    pass


class Annihilated(NamedTuple):
    partner: int
    time: float
    position: float


Fate = Alive | Annihilated


@dataclass(frozen=True, eq=False)
class Outcome:
    """The collision matching of a resolved system, stored column-wise.

    ``partner[i]`` is -1 for a survivor; ``death_time`` is ``inf`` and
    ``death_position`` is ``nan`` there.  ``order`` holds the left index of
    every collision in chronological order.
    """

    partner: np.ndarray
    death_time: np.ndarray
    death_position: np.ndarray
    order: np.ndarray

    def __len__(self) -> int:
        return self.partner.size

    @property
    def alive(self) -> np.ndarray:
        return self.partner < 0

    @property
    def fates(self) -> list[Fate]:
        return [Alive() if p < 0 else Annihilated(int(p), float(t), float(x))
                for p, t, x in zip(self.partner, self.death_time, self.death_position)]

    @property
    def collisions(self) -> list[tuple[int, int, float, float]]:
        return [(int(i), int(self.partner[i]), float(self.death_time[i]),
                 float(self.death_position[i])) for i in self.order]

    def pairs(self) -> np.ndarray:
        """Matched pairs ``(i, j)`` with ``i < j``, sorted by ``i``."""
        left = np.flatnonzero(self.partner > np.arange(self.partner.size))
        return np.column_stack([left, self.partner[left]])

    def same_matching(self, other: "Outcome") -> bool:
        return np.array_equal(self.partner, other.partner)


def _build(sys: ParticleSystem, partner, death, order) -> Outcome:
    pos = np.full(partner.size, np.nan)
    dead = partner >= 0
    left = np.where(dead, np.minimum(np.arange(partner.size), partner), 0)
    pos[dead] = sys.positions[left[dead]] + sys.speeds[left[dead]] * death[dead]
    for a in (partner, death, pos, order):
        a.setflags(write=False)
    return Outcome(partner, death, pos, order)


def resolve_oracle(sys: ParticleSystem) -> Outcome:
    """Replay the dynamics one collision at a time.

    At each step every adjacent alive pair with left speed above right speed
    is a candidate; the earliest one is removed (the leftmost one among
    simultaneous disjoint collisions).  Quadratic, and meant as the reference
    for :func:`resolve_fast`.
    """
    x = sys.positions.tolist()
    v = sys.speeds.tolist()
    n = len(x)
    partner = np.full(n, -1, dtype=np.int64)
    death = np.full(n, np.inf)
    order = []
    alive = list(range(n))
    def pair_time(k):
        i, j = alive[k], alive[k + 1]
        return (x[j] - x[i]) / (v[i] - v[j]) if v[i] > v[j] else None

    while True:
        best = None
        best_at = -1
        for k in range(len(alive) - 1):
            t = pair_time(k)
            if t is not None and (best is None or t < best):
                best, best_at = t, k
        if best is None:
            break
        i, j = alive[best_at], alive[best_at + 1]
        for k in (best_at - 1, best_at + 1):
            if 0 <= k < len(alive) - 1 and pair_time(k) == best:
                raise ExactTie(best, (i, j), (alive[k], alive[k + 1]))
        partner[i], partner[j] = j, i
        death[i] = death[j] = best
        order.append(i)
        del alive[best_at:best_at + 2]
    return _build(sys, partner, death, np.array(order, dtype=np.int64))


def resolve_fast(sys: ParticleSystem) -> Outcome:
    """Event-driven resolution; same result as :func:`resolve_oracle`."""
    partner, death, order, count, status, tie, tie_time = resolve(sys.positions, sys.speeds)
    if status != STATUS_OK:
        raise ExactTie(float(tie_time), (int(tie[0]), int(tie[1])), (int(tie[2]), int(tie[3])))
    return _build(sys, partner, death, order[:count].copy())


def pairs_over(outcome: Outcome, sys: ParticleSystem, x: float) -> int:
    """Number of matched pairs whose starting positions straddle ``x``."""
    pos = sys.positions
    k = int(np.searchsorted(pos, x))
    if k < pos.size and pos[k] == x:
        raise StartCoincidence(f"x={x!r} is the starting position of particle {k}")
    # pairs straddling x are exactly those with left end < k <= right end
    return int(np.count_nonzero(outcome.partner[:k] >= k))


def crossings_of_zero(sys: ParticleSystem, outcome: Outcome, horizon: float) -> int:
    """Number of particles that reach position 0 alive before ``horizon``."""
    if sys.domain is not Domain.HALF:
        raise ValueError("crossings_of_zero is defined for half-line systems")
    x, v = sys.positions, sys.speeds
    moving_left = v < 0
    hit = np.full(x.size, np.inf)
    hit[moving_left] = x[moving_left] / -v[moving_left]
    return int(np.count_nonzero(hit < np.minimum(outcome.death_time, horizon)))


def alive_at(sys: ParticleSystem, outcome: Outcome, t: float) -> list[tuple[float, float]]:
    """Positions and speeds at time ``t`` of particles still alive then."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    keep = outcome.death_time > t
    pos = sys.positions[keep] + sys.speeds[keep] * t
    speeds = sys.speeds[keep]
    idx = np.argsort(pos, kind="stable")
    return list(zip(pos[idx].tolist(), speeds[idx].tolist()))


def check_outcome(sys: ParticleSystem, outcome: Outcome) -> list[str]:
    """Structural checks on a matching; returns a list of violations.

    Checks the involution, that the left member of each pair is faster,
    laminarity (no interleaved pairs), that nested pairs die strictly earlier,
    that pair interiors are even and self-matched, and that both trajectories
    agree on the collision point.
    """
    problems = []
    partner = outcome.partner
    n = partner.size
    idx = np.arange(n)
    matched = partner >= 0
    if np.any(partner[partner[matched]] != idx[matched]):
        problems.append("matching is not an involution")
    pairs = outcome.pairs()
    if pairs.size == 0:
        return problems
    i, j = pairs[:, 0], pairs[:, 1]
    v, x = sys.speeds, sys.positions
    if np.any(v[i] <= v[j]):
        problems.append("a pair has left speed <= right speed")
    t = outcome.death_time[i]
    if np.any(t != outcome.death_time[j]) or np.any(t <= 0):
        problems.append("pair death times are not symmetric and positive")
    xi = x[i] + v[i] * t
    xj = x[j] + v[j] * t
    if np.any(np.abs(xi - xj) > POSITION_RTOL * np.maximum(1.0, np.abs(xi))):
        problems.append("pair trajectories disagree on the collision point")

    # Walking indices left to right with a stack of open pairs detects both
    # interleaving and unmatched interior particles.
    stack: list[int] = []
    for k in range(n):
        p = partner[k]
        if p < 0:
            if stack:
                problems.append(f"survivor {k} lies inside pair ({stack[-1]}, "
                                f"{partner[stack[-1]]})")
                break
        elif p > k:
            if stack and outcome.death_time[k] >= outcome.death_time[stack[-1]]:
                problems.append(f"pair ({k}, {p}) nested in ({stack[-1]}, "
                                f"{partner[stack[-1]]}) does not die earlier")
                break
            stack.append(k)
        else:
            if not stack or stack[-1] != p:
                problems.append(f"pair ({p}, {k}) interleaves another pair")
                break
            stack.pop()
    interior = j - i - 1
    if np.any(interior % 2):
        problems.append("a pair encloses an odd number of particles")
    return problems
