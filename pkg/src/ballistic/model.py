"""Speed laws, Poisson initial configurations and the speed/space transforms.

Positions are always at unit Poisson intensity.  A configuration is either
Palm-conditioned on the full line (a particle sits exactly at 0, with
independent unit-rate processes on each side) or lives on the open half-line.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Domain",
    "ParticleSystem",
    "Seed",
    "SpeedLaw",
    "apply_affine",
    "bullet_to_ballistic",
    "reflect",
    "sample_system",
    "three_speed",
    "uniform_interval",
]

WEIGHT_TOL = 1e-12

# substream ids mixed into the seed sequence
_STREAM_RIGHT_GAPS = 0
_STREAM_LEFT_GAPS = 1
_STREAM_SPEEDS = 2


class Domain(str, enum.Enum):
    FULL = "full"  # Palm-conditioned full line
    HALF = "half"

    @classmethod
    def parse(cls, value: "Domain | str") -> "Domain":
        if isinstance(value, Domain):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown domain {value!r}; expected 'full' or 'half'") from None


@dataclass(frozen=True)
class SpeedLaw:
    """A bounded-support speed distribution.

    Either a finite set of atoms (``atoms`` is a tuple of ``(speed, weight)``
    with strictly increasing speeds) or the uniform law on ``[lo, hi]``
    (``uniform`` is set, ``atoms`` empty).
    """

    atoms: tuple[tuple[float, float], ...] = ()
    uniform: tuple[float, float] | None = None
    # declared speed bound, for families whose atoms may shrink to {0}
    bound: float | None = None

    def __post_init__(self):
        if self.bound is not None and not self.bound >= 0:
            raise ValueError("speed bound must be nonnegative")
        if self.uniform is not None:
            if self.atoms:
                raise ValueError("a law is either discrete or uniform, not both")
            lo, hi = self.uniform
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"uniform interval needs finite lo < hi, got {self.uniform}")
            return
        if not self.atoms:
            raise ValueError("a discrete law needs at least one atom")
        speeds = [s for s, _ in self.atoms]
        weights = [w for _, w in self.atoms]
        if any(not np.isfinite(s) for s in speeds):
            raise ValueError("atom speeds must be finite")
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise ValueError("atom speeds must be strictly increasing")
        if any(w <= 0 for w in weights):
            raise ValueError("atom weights must be positive (zero-weight atoms are elided)")
        if abs(sum(weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"atom weights sum to {sum(weights)!r}, not 1")

    @classmethod
    def discrete(cls, atoms: Sequence[tuple[float, float]],
                 bound: float | None = None) -> "SpeedLaw":
        """Build a discrete law, dropping zero-weight atoms and sorting by speed."""
        kept = sorted((float(s), float(w)) for s, w in atoms if w != 0)
        return cls(atoms=tuple(kept), bound=bound)

    @property
    def is_discrete(self) -> bool:
        return self.uniform is None

    @property
    def v_max(self) -> float:
        if self.uniform is not None:
            attained = max(abs(self.uniform[0]), abs(self.uniform[1]))
        else:
            attained = max(abs(s) for s, _ in self.atoms)
        return float(max(attained, self.bound or 0.0))

    @property
    def speeds(self) -> np.ndarray:
        return np.array([s for s, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    def is_symmetric(self) -> bool:
        if self.uniform is not None:
            return self.uniform[0] == -self.uniform[1]
        return all(s1 == -s2 and w1 == w2
                   for (s1, w1), (s2, w2) in zip(self.atoms, reversed(self.atoms)))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.uniform is not None:
            return rng.uniform(self.uniform[0], self.uniform[1], size=size)
        if len(self.atoms) == 1:
            return np.full(size, self.atoms[0][0])
        return rng.choice(self.speeds, size=size, p=self.weights)

    def to_dict(self) -> dict:
        if self.uniform is not None:
            return {"uniform": [self.uniform[0], self.uniform[1]]}
        doc = {"atoms": [[s, w] for s, w in self.atoms]}
        if self.bound is not None:
            doc["bound"] = self.bound
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SpeedLaw":
        keys = set(doc)
        if keys == {"uniform"}:
            lo, hi = doc["uniform"]
            return uniform_interval(lo, hi)
        if keys in ({"atoms"}, {"atoms", "bound"}):
            return cls.discrete([(s, w) for s, w in doc["atoms"]], doc.get("bound"))
        if keys == {"three_speed"}:
            return three_speed(doc["three_speed"])
        raise ValueError(f"law document must have exactly one of 'atoms', 'uniform', "
                         f"'three_speed'; got keys {sorted(keys)}")


def three_speed(p: float) -> SpeedLaw:
    """Symmetric law on {-1, 0, +1} with mass ``p`` at 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    q = (1.0 - p) / 2.0
    # v_max stays 1 at p = 1 so that light-cone windows match across the family
    return SpeedLaw.discrete([(-1.0, q), (0.0, p), (1.0, q)], bound=1.0)


def uniform_interval(lo: float, hi: float) -> SpeedLaw:
    return SpeedLaw(uniform=(float(lo), float(hi)))


@dataclass(frozen=True)
class Seed:
    master: int
    replica: int = 0

    def __post_init__(self):
        for name in ("master", "replica"):
            value = getattr(self, name)
            if not 0 <= value < 2**64:
                raise ValueError(f"seed {name} must be an unsigned 64-bit integer, got {value}")

    def sequence(self, *keys: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master, spawn_key=(self.replica, *keys))


def _substream(ss: np.random.SeedSequence, stream: int) -> np.random.Generator:
    child = np.random.SeedSequence(ss.entropy, spawn_key=(*ss.spawn_key, stream))
    return np.random.Generator(np.random.Philox(child))


@dataclass(frozen=True, eq=False)
class ParticleSystem:
    """Starting positions and speeds of a finite configuration.

    ``origin`` is the index of the particle at position 0 for a full-line
    Palm system, and 0 (the leftmost particle) on the half-line.
    """

    positions: np.ndarray
    speeds: np.ndarray
    domain: Domain = Domain.HALF
    origin: int = 0
    law: SpeedLaw | None = field(default=None, compare=False)

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        v = np.array(self.speeds, dtype=float)
        if x.ndim != 1 or x.shape != v.shape:
            raise ValueError("positions and speeds must be 1-d arrays of equal length")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("positions must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("positions and speeds must be finite")
        domain = Domain.parse(self.domain)
        if domain is Domain.FULL and x.size:
            if not 0 <= self.origin < x.size or x[self.origin] != 0.0:
                raise ValueError("a full-line Palm system needs positions[origin] == 0")
        if self.law is not None and v.size and np.max(np.abs(v)) > self.law.v_max:
            raise ValueError("a speed exceeds the law's v_max")
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "speeds", v)
        object.__setattr__(self, "domain", domain)

    def __len__(self) -> int:
        return self.positions.size

    def __eq__(self, other):
        if not isinstance(other, ParticleSystem):
            return NotImplemented
        return (self.domain is other.domain and self.origin == other.origin
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.speeds, other.speeds))

    __hash__ = None

    @property
    def v_max(self) -> float:
        if self.law is not None:
            return self.law.v_max
        return float(np.max(np.abs(self.speeds))) if len(self) else 0.0

    @property
    def half_extent(self) -> float:
        """Distance from the origin particle to the nearer sampled boundary."""
        if not len(self):
            return 0.0
        x0 = self.positions[self.origin]
        if self.domain is Domain.HALF:
            return float(self.positions[-1] - x0)
        return float(min(x0 - self.positions[0], self.positions[-1] - x0))

    def with_speeds(self, speeds) -> "ParticleSystem":
        return ParticleSystem(self.positions, speeds, self.domain, self.origin)

    def restrict(self, lo: int, hi: int) -> "ParticleSystem":
        """Sub-system of particles ``lo .. hi - 1`` on the half-line."""
        return ParticleSystem(self.positions[lo:hi], self.speeds[lo:hi], Domain.HALF, 0)


def _exp_gaps(rng: np.random.Generator, n: int) -> np.ndarray:
    gaps = rng.standard_exponential(n)
    bad = gaps <= 0.0
    while bad.any():
        gaps[bad] = rng.standard_exponential(int(bad.sum()))
        bad = gaps <= 0.0
    return gaps


def _sample(law: SpeedLaw, domain: Domain, n: int,
            ss: np.random.SeedSequence) -> ParticleSystem:
    right = np.cumsum(_exp_gaps(_substream(ss, _STREAM_RIGHT_GAPS), n))
    if domain is Domain.HALF:
        speeds = law.sample(n, _substream(ss, _STREAM_SPEEDS))
        return ParticleSystem(right, speeds, Domain.HALF, 0, law)
    left = -np.cumsum(_exp_gaps(_substream(ss, _STREAM_LEFT_GAPS), n))[::-1]
    positions = np.concatenate([left, [0.0], right])
    speeds = law.sample(2 * n + 1, _substream(ss, _STREAM_SPEEDS))
    return ParticleSystem(positions, speeds, Domain.FULL, n, law)


def sample_system(law: SpeedLaw, domain: Domain | str, n: int, seed: Seed) -> ParticleSystem:
    """Draw a unit-intensity Poisson configuration with i.i.d. speeds.

    On the half-line the ``n`` positions are partial sums of Exp(1) gaps.  On
    the full line there are ``n`` particles on each side of a particle at 0
    (``2n + 1`` in total); the two sides use independent substreams.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return _sample(law, Domain.parse(domain), int(n), seed.sequence())


def apply_affine(sys: ParticleSystem, a: float, b: float) -> ParticleSystem:
    """Replace every speed ``v`` by ``a * v + b``.

    For ``a > 0`` the collision matching is unchanged and collision times scale
    by ``1 / a``.
    """
    if a == 0:
        raise ValueError("affine speed change needs a != 0")
    return ParticleSystem(sys.positions, a * sys.speeds + b, sys.domain, sys.origin)


def reflect(sys: ParticleSystem) -> ParticleSystem:
    """Mirror the configuration through x -> -x, reversing the index order.

    A half-line sample mirrors onto the negative axis; its index 0 is then the
    mirrored rightmost particle.
    """
    x = -sys.positions[::-1] + 0.0  # + 0.0 turns -0.0 into 0.0
    v = -sys.speeds[::-1] + 0.0
    n = len(sys)
    origin = 0 if sys.domain is Domain.HALF else n - 1 - sys.origin
    return ParticleSystem(x, v, sys.domain, origin)


def bullet_to_ballistic(release_times: Sequence[float], bullet_speeds: Sequence[float],
                        alpha: float = 0.0, beta: float = 1.0,
                        shift: float = 1.0) -> ParticleSystem:
    """Map the bullet problem onto half-line ballistic annihilation.

    Bullets fired from the origin at ``release_times`` with speeds ``w`` become
    particles at positions ``release_times + shift`` with speeds
    ``1 / (alpha + beta * w)``; swapping the roles of time and space turns a
    bullet collision at distance d into a ballistic collision at time d.
    """
    times = np.asarray(release_times, dtype=float)
    w = np.asarray(bullet_speeds, dtype=float)
    if times.shape != w.shape:
        raise ValueError("release_times and bullet_speeds must have equal length")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("release times must be strictly increasing")
    denom = alpha + beta * w
    if np.any(denom <= 0):
        raise ValueError("alpha + beta * w must be positive for every bullet")
    if shift <= 0:
        raise ValueError("shift must be positive")
    offset = shift - min(float(times[0]), 0.0) if times.size else shift
    return ParticleSystem(times + offset, 1.0 / denom, Domain.HALF, 0)
