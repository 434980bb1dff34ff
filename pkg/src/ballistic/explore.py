"""Left-to-right exploration walk for three-speed systems on the half-line.

The walk visits predictable stopping locations ``K_0 = 0 < K_1 < ...`` and
records an increment ``eps`` whose partial sums equal the balance of
zero-speed minus (-1)-speed survivors of the prefix explored so far, together
with a pessimistic increment ``eps_tilde <= eps`` that depends only on the
speed at ``K_n`` and is therefore i.i.d.

Also here: the drift of the walk, the refinement that explores three
particles at a time, and bisection for the critical mass at zero.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from ._kernels import STATUS_OK, first_self_partner, resolve
from ._kernels import prefix_balances as _prefix_balances
from .engine import ExactTie, resolve_fast
from .model import Domain, ParticleSystem

__all__ = [
    "BlockDriftTable",
    "ExplorationTrace",
    "NoBracket",
    "build_block_table",
    "critical_root",
    "drift_block",
    "drift_single",
    "explore",
    "prefix_balances",
    "survivor_balance",
    "walk_survival_bound",
]

# leftover weights: a free +1 counts nothing, a 0 counts +1, a -1 counts -1
LEFTOVER_WEIGHT = {1: 0, 0: 1, -1: -1}


class NoBracket(ValueError):
    pass


@dataclass(frozen=True)
class ExplorationTrace:
    locations: tuple[int, ...]
    eps: tuple[int, ...]
    eps_tilde: tuple[int, ...]
    incomplete: bool = False

    @property
    def partial_sums(self) -> tuple[int, ...]:
        return tuple(itertools.accumulate(self.eps))

    def __len__(self) -> int:
        return len(self.eps)


def _three_speed_arrays(sys: ParticleSystem) -> tuple[np.ndarray, np.ndarray]:
    if sys.domain is not Domain.HALF:
        raise ValueError("the exploration runs on half-line systems")
    v = sys.speeds
    if not np.all(np.isin(v, (-1.0, 0.0, 1.0))):
        raise ValueError("the exploration needs speeds in {-1, 0, +1}")
    return sys.positions, v


def _least_partner(x, v, who: int, start: int) -> int:
    k = first_self_partner(x, v, who, start)
    if k == -2:
        raise ExactTie(float("nan"), (who, -1), (who, -1))
    return int(k)


def _partners(x, v, lo: int, hi: int) -> np.ndarray:
    """Global partner indices for the system restricted to ``lo .. hi - 1``."""
    partner, _, _, _, status, tie, t = resolve(x[lo:hi], v[lo:hi])
    if status != STATUS_OK:
        raise ExactTie(float(t), (int(tie[0]) + lo, int(tie[1]) + lo),
                       (int(tie[2]) + lo, int(tie[3]) + lo))
    return np.where(partner >= 0, partner + lo, -1)


def explore(sys: ParticleSystem, max_steps: int | None = None) -> ExplorationTrace:
    """Run the exploration walk on a finite half-line three-speed system.

    The walk stops after ``max_steps`` increments, when the next location
    falls off the sample, or when a +1 particle outlives the sample; the last
    case sets ``incomplete``.

    Two locality facts keep the restricted resolutions short.  With speeds
    bounded by 1, nothing left of a +1 particle interacts with anything right
    of it, so partner searches start at that particle.  And nothing crosses a
    survivor of the explored prefix, so a -1 particle only needs the particles
    from the rightmost prefix survivor onwards.
    """
    x, v = _three_speed_arrays(sys)
    n = len(sys)
    locations = [0]
    eps: list[int] = []
    eps_tilde: list[int] = []
    survivors: list[int] = []
    incomplete = False
    while locations[-1] < n and (max_steps is None or len(eps) < max_steps):
        k = locations[-1]
        speed = v[k]
        if speed == 0:
            survivors.append(k)
            step, e, et = k + 1, 1, 1
        elif speed == 1:
            last = _least_partner(x, v, k, k + 1)
            if last < 0:
                incomplete = True
                break
            step, e, et = last + 1, 0, 0
        else:
            lo = survivors[-1] if survivors else 0
            victim = _partners(x, v, lo, k + 1)[k - lo]
            if victim < 0:
                survivors.append(k)
                step, e, et = k + 1, -1, -1
            else:
                freed = _partners(x, v, lo, k)[victim - lo]
                if freed < 0:
                    survivors.pop()
                    step, e, et = k + 1, -1, -1
                else:
                    last = _least_partner(x, v, freed, k + 1)
                    if last < 0:
                        incomplete = True
                        break
                    step, e, et = last + 1, 0, -1
        locations.append(step)
        eps.append(e)
        eps_tilde.append(et)
    return ExplorationTrace(tuple(locations), tuple(eps), tuple(eps_tilde), incomplete)


def survivor_balance(sys: ParticleSystem, upto: int, outcome=None) -> int:
    """Zero-speed minus (-1)-speed survivors among particles ``0 .. upto - 1``.

    ``outcome`` may be passed when it already resolves exactly that prefix.
    """
    if not 0 <= upto <= len(sys):
        raise ValueError(f"upto must lie in [0, {len(sys)}]")
    prefix = sys.restrict(0, upto)
    if outcome is None:
        outcome = resolve_fast(prefix)
    alive = outcome.alive
    v = prefix.speeds
    return int(np.count_nonzero(alive & (v == 0)) - np.count_nonzero(alive & (v == -1)))


def drift_single(p: float) -> float:
    """Mean of ``eps_tilde`` under the symmetric three-speed law: (3p - 1) / 2."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return p - (1.0 - p) / 2.0


@dataclass(frozen=True)
class BlockDriftTable:
    entries: tuple[tuple[tuple[int, int, int], Fraction], ...]

    def ambiguous(self) -> list[tuple[int, int, int]]:
        return [triple for triple, inc in self.entries if inc.denominator != 1]

    def as_dict(self) -> dict[tuple[int, int, int], Fraction]:
        return dict(self.entries)


def _leftover_value(triple: tuple[int, ...]) -> Fraction:
    candidates = [k for k in range(len(triple) - 1) if triple[k] > triple[k + 1]]
    if not candidates:
        return Fraction(sum(LEFTOVER_WEIGHT[s] for s in triple))
    # competing collisions inside a block are equally likely to come first
    total = Fraction(0)
    for k in candidates:
        rest = triple[:k] + triple[k + 2:]
        total += _leftover_value(rest)
    return total / len(candidates)


def build_block_table() -> BlockDriftTable:
    """Expected leftover weight of every speed triple explored as one block.

    Adjacent particles inside a block collide when the left one is faster; the
    survivors are scored +1 for a zero, -1 for a -1 and 0 for a +1.
    """
    entries = tuple((triple, _leftover_value(triple))
                    for triple in itertools.product((-1, 0, 1), repeat=3))
    return BlockDriftTable(entries)


_DEFAULT_TABLE: BlockDriftTable | None = None


def drift_block(p: float, table: BlockDriftTable | None = None) -> float:
    """Expected block increment when each speed is -1, 0, +1 w.p. q, p, q."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    global _DEFAULT_TABLE
    if table is None:
        if _DEFAULT_TABLE is None:
            _DEFAULT_TABLE = build_block_table()
        table = _DEFAULT_TABLE
    q = (1.0 - p) / 2.0
    prob = {-1: q, 0: p, 1: q}
    return math.fsum(prob[a] * prob[b] * prob[c] * float(inc)
                     for (a, b, c), inc in table.entries)


def critical_root(drift: Callable[[float], float], lo: float = 0.0, hi: float = 1.0,
                  tol: float = 1e-9) -> float:
    """Bisection for the sign change of ``drift`` on ``[lo, hi]``."""
    f_lo, f_hi = drift(lo), drift(hi)
    if not (f_lo < 0 < f_hi):
        raise NoBracket(f"drift({lo})={f_lo!r} and drift({hi})={f_hi!r} do not bracket a root")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = drift(mid)
        if f_mid == 0:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def walk_survival_bound(p: float) -> float:
    """Chance that a +-1 walk with up-probability ``p`` stays positive forever.

    Counting zero-speed particles as +1 and all others as -1 gives this lower
    bound on one-sided survival of a zero; its square bounds full-line survival.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return max(0.0, 2.0 * p - 1.0)


def prefix_balances(sys: ParticleSystem, uptos, use_barriers: bool = True) -> np.ndarray:
    """:func:`survivor_balance` for many prefixes at once.

    With ``use_barriers`` the zero-speed survivors of the whole sample split
    each prefix: a -1 particle's fate depends only on what lies to its left,
    and a zero that survives the whole sample is never hit from either side in
    any prefix containing it.  Otherwise every prefix is resolved from scratch.
    """
    x, v = _three_speed_arrays(sys)
    uptos = np.asarray(uptos, dtype=np.int64)
    if uptos.size and (uptos.min() < 0 or uptos.max() > len(sys)):
        raise ValueError("prefix lengths must lie in [0, len(sys)]")
    barriers = np.empty(0, dtype=np.int64)
    if use_barriers and len(sys):
        alive = resolve_fast(sys).alive
        barriers = np.flatnonzero(alive & (v == 0)).astype(np.int64)
    out = _prefix_balances(x, v, uptos, barriers)
    if np.any(out == np.iinfo(np.int64).min):
        raise ExactTie(float("nan"), (-1, -1), (-1, -1))
    return out
