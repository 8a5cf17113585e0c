"""Exact and Monte Carlo tools for the colliding bullets problem."""

__version__ = "0.1.0"

from .errors import (BulletsError, DegenerateConstraint, DimensionMismatch, EmptySample,
                     EqualSpeeds, InvalidParameter, NotGeneric, RecursionStuck,
                     SingularParameter, SizeLimit)
from .geometry import (HalfLine, Rational, SpaceTimePoint, as_rational, collision_point,
                       concurrent, format_rational, side_of_line, virtual_collision_time)
from .engine import (Configuration, Diagram, Parameter, load_parameter, param_hash, realize,
                     resolve, resolve_naive, survivor_count, survivor_trajectory)
from .scheme import (CriticalPattern, TcsTable, compute_tcs, find_critical_patterns, full_tcs,
                     is_generic, pairs_from_tcs, require_generic, survivors_from_tcs)
from .law import (SurvivorDistribution, central_moments_floating, decomposition, q_exact,
                  q_floating, q_moments, sample_markov, zero_product)
from .enumeration import (ConstrainedParameter, CountTable, CrossingSet, Side, enumerate_constrained,
                          enumerate_ff, intersection_height, rank, unrank)
from .models import (ImpetusProblem, SpeedSampler, compare_empirical, flock_destruction_time,
                     flock_run, matrix_extremes_run, odd_cycle_count, sample_faf, sample_ff,
                     sample_many, sample_ru, sample_rr, two_step_distance, two_step_law)
from .rng import stream
