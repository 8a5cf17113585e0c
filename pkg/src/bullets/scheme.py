"""Genericity certification, critical patterns and topological colliding schemes.

A parameter is singular exactly when three virtual trajectories can be made
concurrent by some configuration.  Shifting time so that the first of the
three is shot at 0, such a triple is described by speeds ``(v_m, v_l, v_r)``
and two disjoint delay sums ``d_l, d_r`` with ``HL(v_m, 0)``, ``HL(v_l, d_l)``
and ``HL(v_r, d_l + d_r)`` concurrent.  :func:`find_critical_patterns` finds
them all without visiting the ``n! (n-1)!`` configurations.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Dict, FrozenSet, List, Optional, Tuple

from gmpy2 import mpq

from .engine import Configuration, Parameter, realize
from .errors import NotGeneric, RecursionStuck, SizeLimit
from .geometry import HalfLine, collision_point, concurrent, format_rational, side_of_line

DEFAULT_PATTERN_MAX_N = 12


@dataclass(frozen=True)
class CriticalPattern:
    v_m: mpq
    v_l: mpq
    v_r: mpq
    d_l: mpq
    d_r: mpq
    left_delays: Tuple[int, ...]
    right_delays: Tuple[int, ...]
    triple_height: mpq
    minimal: bool

    def half_lines(self):
        return (HalfLine(self.v_m, 0), HalfLine(self.v_l, self.d_l),
                HalfLine(self.v_r, self.d_l + self.d_r))

    def to_json(self) -> dict:
        return {
            "v_m": format_rational(self.v_m), "v_l": format_rational(self.v_l),
            "v_r": format_rational(self.v_r), "d_l": format_rational(self.d_l),
            "d_r": format_rational(self.d_r), "left_delays": list(self.left_delays),
            "right_delays": list(self.right_delays),
            "triple_height": format_rational(self.triple_height), "minimal": self.minimal,
        }


def _max_n(max_n):
    if max_n is not None:
        return max_n
    return int(os.environ.get("BULLETS_MAX_N", DEFAULT_PATTERN_MAX_N))


def _subset_sums(delays):
    """Map each delay sum to the index masks (non-empty) producing it."""
    sums: Dict[mpq, List[int]] = {}
    m = len(delays)
    for mask in range(1, 1 << m):
        total = sum((delays[k] for k in range(m) if mask >> k & 1), mpq(0))
        sums.setdefault(total, []).append(mask)
    return sums


def _indices(mask):
    return tuple(k for k in range(mask.bit_length()) if mask >> k & 1)


def find_critical_patterns(p: Parameter, max_n: Optional[int] = None) -> List[CriticalPattern]:
    """Every critical pattern of ``p``, in a deterministic order."""
    if p.n > _max_n(max_n):
        raise SizeLimit(f"pattern scan limited to n <= {_max_n(max_n)}, got {p.n}")
    if p.n < 3:
        return []
    sums = _subset_sums(p.delays)
    out = []
    for v_m, v_l, v_r in permutations(p.speeds, 3):
        # line l (shot d_l after m) catches m only when faster
        if v_l <= v_m or v_r == 0:
            continue
        for d_l, left_masks in sums.items():
            T = v_l * d_l / (v_l - v_m)
            y = v_m * T
            d_r = T - d_l - y / v_r
            if d_r <= 0 or d_r not in sums:
                continue
            # exact recheck through the geometric predicate
            if not concurrent(HalfLine(v_m, 0), HalfLine(v_l, d_l), HalfLine(v_r, d_l + d_r)):
                continue
            for lm in left_masks:
                for rm in sums[d_r]:
                    if lm & rm:
                        continue
                    li, ri = _indices(lm), _indices(rm)
                    out.append(CriticalPattern(v_m, v_l, v_r, d_l, d_r, li, ri, y,
                                               len(li) == 1 and len(ri) == 1))
    return out


@lru_cache(maxsize=256)
def is_generic(p: Parameter, max_n: Optional[int] = None) -> bool:
    return not find_critical_patterns(p, max_n)


def require_generic(p: Parameter) -> None:
    if not is_generic(p):
        pats = find_critical_patterns(p)
        raise NotGeneric(f"parameter has {len(pats)} critical pattern(s)", pats)


def is_generic_bruteforce(p: Parameter) -> bool:
    """Definition-level check: no triple of virtual trajectories is concurrent
    in any configuration.  Exponential; test oracle only."""
    n = p.n
    for sigma in permutations(range(n)):
        for tau in permutations(range(n - 1)):
            shots = realize(p, Configuration(sigma, tau))
            for a, b, c in combinations(shots, 3):
                if concurrent(a, b, c):
                    return False
    return True


# --- topological colliding scheme -------------------------------------------

Key = Tuple[int, int, Optional[int]]


@dataclass(frozen=True)
class TcsTable:
    """One configuration's slice of the scheme: ``(i, j, k) -> {-1, 0, +1}``.

    Keys have ``i < j`` and ``k`` outside ``{i, j}``; for two bullets the only
    key is ``(0, 1, None)``.
    """

    n: int
    entries: Dict[Key, int]

    def __getitem__(self, key: Key) -> int:
        i, j, k = key
        if i > j:
            i, j = j, i
        return self.entries[(i, j, k)]

    def row_is_zero(self, i, subset) -> bool:
        """True when line ``i`` meets no other line of ``subset``."""
        return all(self.pair_exists(i, j) is False for j in subset if j != i)

    def pair_exists(self, i, j) -> bool:
        a, b = min(i, j), max(i, j)
        if self.n == 2:
            return self.entries[(0, 1, None)] != 0
        k = next(x for x in range(self.n) if x not in (a, b))
        return self.entries[(a, b, k)] != 0

    def key(self):
        return tuple(sorted(self.entries.items(), key=lambda kv: (kv[0][0], kv[0][1], -1 if kv[0][2] is None else kv[0][2])))


def tcs_from_shots(shots) -> TcsTable:
    n = len(shots)
    entries: Dict[Key, int] = {}
    if n == 2:
        entries[(0, 1, None)] = 0 if collision_point(shots[0], shots[1]) is None else 1
        return TcsTable(n, entries)
    for i, j in combinations(range(n), 2):
        m = collision_point(shots[i], shots[j])
        for k in range(n):
            if k == i or k == j:
                continue
            entries[(i, j, k)] = 0 if m is None else side_of_line(m, shots[k])
    return TcsTable(n, entries)


def compute_tcs(p: Parameter, c: Configuration, check_generic: bool = True) -> TcsTable:
    if check_generic:
        require_generic(p)
    return tcs_from_shots(realize(p, c))


def full_tcs(p: Parameter):
    """The whole map ``(sigma, tau) -> slice``, keyed by configuration tuples."""
    require_generic(p)
    return {(s, t): tcs_from_shots(realize(p, Configuration(s, t))).key()
            for s in permutations(range(p.n)) for t in permutations(range(p.n - 1))}


def _tcs_recurse(table: TcsTable, bullets: Tuple[int, ...]):
    """Survivors and collision pairs of the sub-problem restricted to ``bullets``."""
    if len(bullets) <= 1:
        return frozenset(bullets), ()
    first, rest = bullets[0], bullets[1:]
    if table.row_is_zero(first, bullets):
        surv, pairs = _tcs_recurse(table, rest)
        return surv | {first}, pairs
    J = None
    for cand in rest:
        if not table.pair_exists(first, cand):
            continue
        if all(table[(first, cand, k)] == 1 for k in bullets if k not in (first, cand)):
            J = cand
            break
    if J is None:
        raise RecursionStuck(f"no admissible partner for bullet {first} among {bullets}")
    inner = tuple(b for b in rest if b <= J)
    inner_surv, inner_pairs = _tcs_recurse(table, inner)
    if J in inner_surv:
        tail = tuple(b for b in bullets if b > J)
        surv, pairs = _tcs_recurse(table, tail)
        return surv, inner_pairs + ((first, J),) + pairs
    partner = next(a if b == J else b for a, b in inner_pairs if J in (a, b))
    remaining = tuple(b for b in bullets if b not in (J, partner))
    surv, pairs = _tcs_recurse(table, remaining)
    return surv, ((min(J, partner), max(J, partner)),) + pairs


def survivors_from_tcs(table: TcsTable) -> FrozenSet[int]:
    """Survivor indices recovered from the scheme alone (no coordinates)."""
    return _tcs_recurse(table, tuple(range(table.n)))[0]


def pairs_from_tcs(table: TcsTable):
    return sorted(_tcs_recurse(table, tuple(range(table.n)))[1])
