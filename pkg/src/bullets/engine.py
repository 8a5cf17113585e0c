"""Resolution of a shooting sequence into its true space-time diagram.

Bullets are indexed ``0..n-1`` in shot order.  Two production paths exist:

* :func:`resolve` keeps a doubly linked list of live bullets plus a heap of
  virtual collision times of *adjacent* live pairs.  Only adjacent bullets
  can be the next to collide (bullets never overtake one another without
  colliding), so this is ``O(n log n)``.
* :func:`resolve_naive` is the all-pairs minimum scan, ``O(n^3)``.  It is kept
  as an oracle for the first.
"""
from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, field
from itertools import accumulate
from typing import FrozenSet, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .errors import DimensionMismatch, EqualSpeeds, InvalidParameter, SingularParameter
from .geometry import INFINITY, HalfLine, as_rational, format_rational, virtual_collision_time

ShotSequence = List[HalfLine]


@dataclass(frozen=True)
class Parameter:
    """Sorted speeds ``V_1 < ... < V_n`` (all >= 0) and positive delays."""

    speeds: Tuple[mpq, ...]
    delays: Tuple[mpq, ...]

    def __post_init__(self):
        speeds = tuple(as_rational(v) for v in self.speeds)
        delays = tuple(as_rational(d) for d in self.delays)
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "delays", delays)
        if not speeds:
            raise InvalidParameter("speeds", "at least one speed is required")
        if len(delays) != len(speeds) - 1:
            raise InvalidParameter(
                "delays", f"expected {len(speeds) - 1} delays, got {len(delays)}")
        for i, v in enumerate(speeds):
            if v < 0:
                raise InvalidParameter(f"speeds[{i}]", f"negative speed {v}")
            if i and v <= speeds[i - 1]:
                raise InvalidParameter(f"speeds[{i}]", "speeds must be strictly increasing")
        for i, d in enumerate(delays):
            if d <= 0:
                raise InvalidParameter(f"delays[{i}]", f"delay must be positive, got {d}")

    @property
    def n(self) -> int:
        return len(self.speeds)

    @classmethod
    def from_unsorted(cls, speeds, delays):
        return cls(tuple(sorted(as_rational(v) for v in speeds)), tuple(delays))

    def scaled(self, speed_factor=1, delay_factor=1) -> "Parameter":
        c, d = as_rational(speed_factor), as_rational(delay_factor)
        return Parameter(tuple(c * v for v in self.speeds), tuple(d * x for x in self.delays))

    def to_json(self) -> dict:
        return {"speeds": [format_rational(v) for v in self.speeds],
                "delays": [format_rational(d) for d in self.delays]}

    @classmethod
    def from_json(cls, obj: dict) -> "Parameter":
        for key in ("speeds", "delays"):
            if key not in obj:
                raise InvalidParameter(key, "missing field")
            if not isinstance(obj[key], list):
                raise InvalidParameter(key, "must be a list of rational strings")
        speeds = [_parse_field(f"speeds[{i}]", x) for i, x in enumerate(obj["speeds"])]
        delays = [_parse_field(f"delays[{i}]", x) for i, x in enumerate(obj["delays"])]
        return cls(tuple(speeds), tuple(delays))

    def digest(self) -> str:
        return param_hash(self.to_json())


def _parse_field(name, value):
    try:
        return as_rational(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InvalidParameter(name, f"not a rational: {value!r}") from exc


def param_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_parameter(path) -> Parameter:
    with open(path) as fh:
        return Parameter.from_json(json.load(fh))


@dataclass(frozen=True)
class Configuration:
    """``sigma`` assigns speed ranks to shot positions, ``tau`` delays to gaps (0-based)."""

    sigma: Tuple[int, ...]
    tau: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(self.sigma))
        object.__setattr__(self, "tau", tuple(self.tau))
        if sorted(self.sigma) != list(range(len(self.sigma))):
            raise InvalidParameter("sigma", "not a permutation of 0..n-1")
        if sorted(self.tau) != list(range(len(self.tau))):
            raise InvalidParameter("tau", "not a permutation of 0..n-2")
        if len(self.tau) != max(len(self.sigma) - 1, 0):
            raise DimensionMismatch("tau must have one entry fewer than sigma")


def realize(p: Parameter, c: Configuration) -> ShotSequence:
    """Shots for configuration ``c``: birth times are prefix sums of permuted delays."""
    if len(c.sigma) != p.n:
        raise DimensionMismatch(f"sigma has size {len(c.sigma)}, parameter has {p.n} speeds")
    births = [mpq(0)] + list(accumulate(p.delays[k] for k in c.tau))
    return [HalfLine(p.speeds[s], t) for s, t in zip(c.sigma, births)]


def shots_from(speeds: Sequence, births: Sequence) -> ShotSequence:
    return [HalfLine(v, t) for v, t in zip(speeds, births)]


def validate_shots(shots: ShotSequence) -> None:
    for i in range(1, len(shots)):
        if shots[i].birth <= shots[i - 1].birth:
            raise InvalidParameter(f"shots[{i}].birth", "birth times must be strictly increasing")
    if len({s.speed for s in shots}) != len(shots):
        raise EqualSpeeds("shot speeds must be pairwise distinct")


@dataclass
class Diagram:
    births: List[mpq]
    speeds: List[mpq]
    deaths: list            # mpq or INFINITY
    partners: List[Optional[int]]
    survivors: FrozenSet[int] = field(default=frozenset())

    @property
    def n(self) -> int:
        return len(self.births)

    def death_position(self, i):
        if self.deaths[i] == INFINITY:
            return INFINITY
        return self.speeds[i] * (self.deaths[i] - self.births[i])

    def pairs(self):
        return sorted((i, j) for i, j in enumerate(self.partners) if j is not None and i < j)

    def to_json(self) -> dict:
        return {
            "bullets": [
                {"birth": format_rational(b), "speed": format_rational(v),
                 "death": None if d == INFINITY else format_rational(d), "partner": q}
                for b, v, d, q in zip(self.births, self.speeds, self.deaths, self.partners)
            ],
            "survivors": sorted(self.survivors),
        }


def _finish(shots, deaths, partners) -> Diagram:
    survivors = frozenset(i for i, q in enumerate(partners) if q is None)
    return Diagram([s.birth for s in shots], [s.speed for s in shots], deaths, partners, survivors)


def resolve(shots: ShotSequence, validate: bool = True) -> Diagram:
    """True diagram of ``shots`` (adjacent-pair event queue)."""
    if validate:
        validate_shots(shots)
    n = len(shots)
    v = [s.speed for s in shots]
    t = [s.birth for s in shots]
    deaths = [INFINITY] * n
    partners: List[Optional[int]] = [None] * n
    nxt = list(range(1, n + 1))
    nxt[-1:] = [-1] if n else []
    prv = list(range(-1, n - 1))

    def ct(i, j):
        # i shot before j; j can only catch i if it is faster
        if v[j] <= v[i]:
            return None
        T = (v[j] * t[j] - v[i] * t[i]) / (v[j] - v[i])
        return T if T >= t[j] else None

    heap = []
    for i in range(n - 1):
        T = ct(i, i + 1)
        if T is not None:
            heap.append((T, i, i + 1))
    heapq.heapify(heap)

    while heap:
        T = heap[0][0]
        batch = []
        while heap and heap[0][0] == T:
            _, i, j = heapq.heappop(heap)
            if deaths[i] == INFINITY and deaths[j] == INFINITY and nxt[i] == j:
                batch.append((i, j))
        if not batch:
            continue
        seen = set()
        for i, j in batch:
            if i in seen or j in seen:
                raise SingularParameter(f"triple collision at time {T} involving bullets {i}, {j}")
            seen.add(i)
            seen.add(j)
        for i, j in batch:
            deaths[i] = deaths[j] = T
            partners[i], partners[j] = j, i
            p, q = prv[i], nxt[j]
            if p >= 0:
                nxt[p] = q
            if q >= 0:
                prv[q] = p
            if p >= 0 and q >= 0 and deaths[p] == INFINITY and deaths[q] == INFINITY:
                T2 = ct(p, q)
                if T2 is not None:
                    if T2 <= T:
                        raise SingularParameter(f"concurrent collision at time {T}")
                    heapq.heappush(heap, (T2, p, q))
    return _finish(shots, deaths, partners)


def resolve_naive(shots: ShotSequence) -> Diagram:
    """Literal all-pairs scan: repeatedly remove every pair achieving the minimal collision time."""
    validate_shots(shots)
    n = len(shots)
    live = set(range(n))
    deaths = [INFINITY] * n
    partners: List[Optional[int]] = [None] * n
    while len(live) > 1:
        order = sorted(live)
        best, pairs = INFINITY, []
        for a in range(len(order)):
            for b in range(a + 1, len(order)):
                i, j = order[a], order[b]
                T = virtual_collision_time(shots[i], shots[j])
                if T < best:
                    best, pairs = T, [(i, j)]
                elif T == best and T != INFINITY:
                    pairs.append((i, j))
        if best == INFINITY:
            break
        involved = [x for pair in pairs for x in pair]
        if len(set(involved)) != len(involved):
            raise SingularParameter(f"bullet in two colliding pairs at time {best}")
        for i, j in pairs:
            y = shots[i].position(best)
            for k in live.difference((i, j)):
                if shots[k].birth <= best and shots[k].position(best) == y:
                    raise SingularParameter(f"triple collision at time {best}")
        for i, j in pairs:
            deaths[i] = deaths[j] = best
            partners[i], partners[j] = j, i
            live.difference_update((i, j))
    return _finish(shots, deaths, partners)


def survivor_count(shots: ShotSequence) -> int:
    return len(resolve(shots, validate=False).survivors)


def survivor_trajectory(speed_stream: Sequence, delays: Sequence, n: int) -> List[int]:
    """``|S_j|`` for ``j = 1..n``, each prefix resolved from scratch."""
    speeds = [as_rational(x) for x in speed_stream[:n]]
    gaps = [as_rational(x) for x in delays[: max(n - 1, 0)]]
    if len(speeds) < n or len(gaps) < n - 1:
        raise DimensionMismatch(f"need {n} speeds and {n - 1} delays")
    births = [mpq(0)] + list(accumulate(gaps))
    shots = shots_from(speeds, births)
    validate_shots(shots)
    return [len(resolve(shots[:j], validate=False).survivors) for j in range(1, n + 1)]
