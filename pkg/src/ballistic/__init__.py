"""One-dimensional ballistic annihilation: simulation, exploration walk and statistics."""
from .engine import (ExactTie, Outcome, StartCoincidence, alive_at, check_outcome,
                     crossings_of_zero, pairs_over, resolve_fast, resolve_oracle)
from .model import (Domain, ParticleSystem, Seed, SpeedLaw, apply_affine, bullet_to_ballistic,
                    reflect, sample_system, three_speed, uniform_interval)

__version__ = "0.1.0"
