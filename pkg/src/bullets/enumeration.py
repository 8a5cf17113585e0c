"""Exhaustive enumeration over configuration spaces.

Configurations are addressed through the factorial number system: a speed
permutation of rank ``r`` is recovered by :func:`unrank`, so the space splits
into contiguous rank ranges that workers process independently.  Tallies are
merged by addition, hence results do not depend on the number of workers.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import accumulate, permutations
from typing import Dict, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .engine import Parameter, param_hash, resolve
from .errors import DegenerateConstraint, InvalidParameter, SizeLimit
from .geometry import HalfLine, as_rational, format_rational
from .scheme import require_generic

DEFAULT_FF_MAX_N = 7
DEFAULT_CONSTRAINED_MAX_N = 6
# fixed so that results and metadata do not depend on the worker count
DEFAULT_CHUNKS = 24


def _bound(max_n, default):
    if max_n is not None:
        return max_n
    env = os.environ.get("BULLETS_MAX_N")
    return int(env) if env else default


# --- factorial number system ------------------------------------------------

def rank(perm: Sequence[int]) -> int:
    """Lexicographic rank of a permutation of ``0..n-1``."""
    n = len(perm)
    r = 0
    remaining = list(range(n))
    for i, x in enumerate(perm):
        pos = remaining.index(x)
        r += pos * math.factorial(n - 1 - i)
        remaining.pop(pos)
    return r


def unrank(r: int, n: int) -> Tuple[int, ...]:
    if not 0 <= r < math.factorial(n):
        raise ValueError(f"rank {r} out of range for n={n}")
    remaining = list(range(n))
    out = []
    for i in range(n, 0, -1):
        f = math.factorial(i - 1)
        q, r = divmod(r, f)
        out.append(remaining.pop(q))
    return tuple(out)


def chunk_ranges(total: int, chunks: int) -> List[Tuple[int, int]]:
    chunks = max(1, min(chunks, total)) if total else 1
    step, extra = divmod(total, chunks)
    out, start = [], 0
    for c in range(chunks):
        stop = start + step + (c < extra)
        out.append((start, stop))
        start = stop
    return out


@dataclass
class CountTable:
    counts: Dict[int, int]
    total: int
    by_position: Optional[List[int]] = None   # survival counts per shot index
    by_speed: Optional[List[int]] = None      # survival counts per speed rank
    meta: dict = field(default_factory=dict)

    def frequencies(self) -> Dict[int, mpq]:
        return {k: mpq(c, self.total) for k, c in sorted(self.counts.items()) if c}

    def to_json(self) -> dict:
        out = {"counts": {str(k): c for k, c in sorted(self.counts.items()) if c},
               "total": self.total}
        if self.by_position is not None:
            out["by_position"] = self.by_position
            out["by_speed"] = self.by_speed
        out.update(self.meta)
        return out


def _run_chunks(worker, args_list, jobs):
    if jobs <= 1 or len(args_list) <= 1:
        return [worker(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(worker, *zip(*args_list)))


# --- fixed speeds, fixed delays ---------------------------------------------

def _ff_chunk(speeds, delays, start, stop):
    n = len(speeds)
    counts = Counter()
    by_pos = [0] * n
    by_speed = [0] * n
    birth_rows = [[mpq(0)] + list(accumulate(delays[k] for k in tau))
                  for tau in permutations(range(n - 1))]
    for r in range(start, stop):
        sigma = unrank(r, n)
        v = [speeds[s] for s in sigma]
        for births in birth_rows:
            d = resolve([HalfLine(a, b) for a, b in zip(v, births)], validate=False)
            counts[len(d.survivors)] += 1
            for i in d.survivors:
                by_pos[i] += 1
                by_speed[sigma[i]] += 1
    return counts, by_pos, by_speed


def enumerate_ff(p: Parameter, jobs: int = 1, max_n: Optional[int] = None,
                 chunks: Optional[int] = None) -> CountTable:
    """Survivor counts over all ``n! (n-1)!`` configurations of a generic parameter."""
    bound = _bound(max_n, DEFAULT_FF_MAX_N)
    if p.n > bound:
        raise SizeLimit(f"exhaustive FF enumeration limited to n <= {bound}, got {p.n}")
    require_generic(p)
    n = p.n
    ranges = chunk_ranges(math.factorial(n), chunks or DEFAULT_CHUNKS)
    parts = _run_chunks(_ff_chunk, [(p.speeds, p.delays, a, b) for a, b in ranges], jobs)
    counts, by_pos, by_speed = Counter(), [0] * n, [0] * n
    for c, bp, bs in parts:
        counts.update(c)
        by_pos = [x + y for x, y in zip(by_pos, bp)]
        by_speed = [x + y for x, y in zip(by_speed, bs)]
    total = math.factorial(n) * math.factorial(n - 1)
    return CountTable(dict(sorted(counts.items())), total, by_pos, by_speed,
                      {"model": "ff", "n": n, "parameter_hash": p.digest(), "chunks": len(ranges)})


# --- constrained left / right models ----------------------------------------

class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class CrossingSet(str, Enum):
    ZERO = "zero"          # {0}
    ALL = "all"            # Z_+
    POSITIVE = "pos"       # Z_+ \ {0}

    def contains(self, c: int) -> bool:
        if self is CrossingSet.ZERO:
            return c == 0
        if self is CrossingSet.POSITIVE:
            return c > 0
        return True


@dataclass(frozen=True)
class ConstrainedParameter:
    free_speeds: Tuple[mpq, ...]
    v_min: mpq
    v_r: mpq
    free_delays: Tuple[mpq, ...]
    delta_star: mpq
    s: mpq = mpq(0)
    A: CrossingSet = CrossingSet.ALL

    def __post_init__(self):
        for name in ("free_speeds", "free_delays"):
            object.__setattr__(self, name, tuple(as_rational(x) for x in getattr(self, name)))
        for name in ("v_min", "v_r", "delta_star", "s"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))
        object.__setattr__(self, "A", CrossingSet(self.A))
        if len(self.free_delays) != len(self.free_speeds):
            raise InvalidParameter("free_delays", "need exactly as many free delays as free speeds")
        speeds = self.free_speeds + (self.v_min, self.v_r)
        if len(set(speeds)) != len(speeds):
            raise InvalidParameter("free_speeds", "speeds must be pairwise distinct")
        if self.v_min < 0:
            raise InvalidParameter("v_min", "negative speed")
        if any(v < self.v_min for v in speeds):
            raise InvalidParameter("v_min", "v_min must be the minimal speed")
        if any(d <= 0 for d in self.free_delays) or self.delta_star <= 0:
            raise InvalidParameter("free_delays", "delays must be positive")
        if self.s < 0 or self.s > self.height:
            raise InvalidParameter("s", f"s must lie in [0, H={self.height}]")

    @property
    def n(self) -> int:
        return len(self.free_speeds) + 2

    @property
    def height(self) -> mpq:
        return intersection_height(self)

    def with_constraint(self, s=None, A=None) -> "ConstrainedParameter":
        return ConstrainedParameter(self.free_speeds, self.v_min, self.v_r, self.free_delays,
                                    self.delta_star, self.s if s is None else as_rational(s),
                                    self.A if A is None else A)

    def parameter(self) -> Parameter:
        """The underlying unconstrained parameter (speeds sorted)."""
        return Parameter.from_unsorted(self.free_speeds + (self.v_min, self.v_r),
                                       self.free_delays + (self.delta_star,))

    def to_json(self) -> dict:
        return {"free_speeds": [format_rational(v) for v in self.free_speeds],
                "v_min": format_rational(self.v_min), "v_r": format_rational(self.v_r),
                "free_delays": [format_rational(d) for d in self.free_delays],
                "delta_star": format_rational(self.delta_star)}

    @classmethod
    def from_json(cls, obj: dict, s=0, A=CrossingSet.ALL) -> "ConstrainedParameter":
        for key in ("free_speeds", "v_min", "v_r", "free_delays", "delta_star"):
            if key not in obj:
                raise InvalidParameter(key, "missing field")
        try:
            return cls(tuple(obj["free_speeds"]), obj["v_min"], obj["v_r"],
                       tuple(obj["free_delays"]), obj["delta_star"], s, A)
        except (TypeError, ZeroDivisionError) as exc:
            raise InvalidParameter("constrained parameter", str(exc)) from exc


def intersection_height(cp) -> mpq:
    """Height where ``HL(v_min, 0)`` meets ``HL(v_r, delta_star)``."""
    if cp.v_min >= cp.v_r:
        raise InvalidParameter("v_r", "v_r must exceed v_min")
    return cp.v_min * cp.v_r * cp.delta_star / (cp.v_r - cp.v_min)


def crossings(diagram, special: int, side: Side, t_right, v_r, heights) -> List[int]:
    """Number of true trajectories meeting the special segment, for each height bound.

    The segment lies on the line of speed ``v_r`` through ``(t_right, 0)``.  The
    distinguished bullet (index ``special``) never counts.  A trajectory that
    ends on the segment counts only when it is killed by the distinguished
    ``v_r`` bullet (right side); any other endpoint incidence is ambiguous.
    """
    out = [0] * len(heights)
    for i in range(diagram.n):
        if i == special:
            continue
        v, t0, death = diagram.speeds[i], diagram.births[i], diagram.deaths[i]
        if v == v_r:
            continue
        t = (v * t0 - v_r * t_right) / (v - v_r)
        y = v_r * (t - t_right)
        if y <= 0 or t < t0 or t > death:
            continue
        endpoint = t == death
        if endpoint and not (side is Side.RIGHT and diagram.partners[i] == special):
            if any(y <= h for h in heights):
                raise DegenerateConstraint(
                    f"bullet {i} dies exactly on the special segment at height {y}")
            continue
        for idx, h in enumerate(heights):
            if y <= h:
                out[idx] += 1
    return out


def _constrained_chunk(free_speeds, v_min, v_r, free_delays, delta_star, side, heights,
                       start, stop):
    m = len(free_speeds)          # n - 2
    delays = free_delays + (delta_star,)
    star = len(delays) - 1
    tally = Counter()             # (height index, crossings, survivors) -> count
    taus = []
    for tau in permutations(range(m + 1)):
        births = [mpq(0)] + list(accumulate(delays[k] for k in tau))
        p = tau.index(star)
        taus.append((births, p))
    for r in range(start, stop):
        sigma = unrank(r, m) if m else ()
        for births, p in taus:
            t_left, t_right = births[p], births[p + 1]
            shots = []
            it = iter(sigma)
            special_time = t_left if side is Side.LEFT else t_right
            special_speed = v_min if side is Side.LEFT else v_r
            special = None
            for tb in births:
                if tb == special_time:
                    special = len(shots)
                    shots.append(HalfLine(special_speed, tb))
                elif tb in (t_left, t_right):
                    continue
                else:
                    shots.append(HalfLine(free_speeds[next(it)], tb))
            d = resolve(shots, validate=False)
            k = len(d.survivors)
            for hi, c in enumerate(crossings(d, special, side, t_right, v_r, heights)):
                tally[(hi, c, k)] += 1
    return tally


def constrained_profile(cp: ConstrainedParameter, side: Side, heights: Sequence,
                        jobs: int = 1, max_n: Optional[int] = None, chunks: Optional[int] = None):
    """``Counter`` of ``(height index, crossing count, survivors)`` over all configurations."""
    bound = _bound(max_n, DEFAULT_CONSTRAINED_MAX_N)
    if cp.n > bound:
        raise SizeLimit(f"constrained enumeration limited to n <= {bound}, got {cp.n}")
    side = Side(side)
    require_generic(cp.parameter())
    heights = tuple(as_rational(h) for h in heights)
    m = cp.n - 2
    ranges = chunk_ranges(math.factorial(m), chunks or DEFAULT_CHUNKS)
    args = [(cp.free_speeds, cp.v_min, cp.v_r, cp.free_delays, cp.delta_star, side, heights, a, b)
            for a, b in ranges]
    tally = Counter()
    for part in _run_chunks(_constrained_chunk, args, jobs):
        tally.update(part)
    return tally, len(ranges)


def enumerate_constrained(cp: ConstrainedParameter, side, jobs: int = 1,
                          max_n: Optional[int] = None, chunks: Optional[int] = None) -> CountTable:
    """Counts ``|LR(..., s, A, k)|`` (left) or ``|RR(..., s, A, k)|`` (right) per ``k``."""
    side = Side(side)
    tally, nchunks = constrained_profile(cp, side, [cp.s], jobs, max_n, chunks)
    counts = Counter()
    for (_, c, k), num in tally.items():
        if cp.A.contains(c):
            counts[k] += num
    total = sum(counts.values())
    return CountTable(dict(sorted(counts.items())), total, meta={
        "model": "lr" if side is Side.LEFT else "rr", "n": cp.n, "s": format_rational(cp.s),
        "A": cp.A.value, "parameter_hash": param_hash(cp.to_json()), "chunks": nchunks})
