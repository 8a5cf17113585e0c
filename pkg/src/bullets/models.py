"""Samplers for the bullet models and the four combinatorial models sharing ``q_n``.

Bullet models (all resolved exactly with :func:`bullets.engine.resolve`):

* RU: i.i.d. speeds, shots at times 1..n;
* RR: i.i.d. speeds and i.i.d. delays;
* FF: a fixed parameter with uniformly permuted speeds and delays;
* FAF: like FF but positions ``f(I (t - T))`` for an increasing ``f``.

Combinatorial models: the sorted flock, odd cycles of a uniform permutation,
recursive matrix minima and the two-step tree.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import accumulate
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from gmpy2 import mpq, mpz
from scipy import stats

from .engine import Configuration, Parameter, realize, resolve, shots_from
from .errors import EmptySample, InvalidParameter, SingularParameter
from .geometry import as_rational
from .law import SurvivorDistribution
from .rng import stream, to_rational
from .scheme import require_generic

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

MAX_RETRIES = 50


# --- random rational draws --------------------------------------------------

@dataclass(frozen=True)
class SpeedSampler:
    """Distinct exact draws from ``uniform(0, 1)``, ``exponential(rate)`` or a table.

    Draws are doubles taken at their exact dyadic value; repeated values are
    redrawn so the law is atomless in effect.
    """

    kind: str = "uniform"
    rate: float = 1.0
    table: Tuple = ()
    positive: bool = False

    def _one(self, rng):
        if self.kind == "uniform":
            return to_rational(rng.random())
        if self.kind == "exponential":
            return to_rational(rng.exponential(1.0 / self.rate))
        if self.kind == "table":
            return as_rational(self.table[int(rng.integers(len(self.table)))])
        raise ValueError(f"unknown sampler kind {self.kind!r}")

    def draw(self, rng, n: int) -> List[mpq]:
        if self.kind == "table" and len(set(self.table)) < n:
            raise InvalidParameter("table", f"need at least {n} distinct table values")
        if self.kind == "uniform":
            out = [to_rational(x) for x in rng.random(n)]
        else:
            out = [self._one(rng) for _ in range(n)]
        while True:
            bad = [i for i, x in enumerate(out)
                   if (self.positive and x <= 0) or out.index(x) != i]
            if not bad:
                return out
            for i in bad:
                out[i] = self._one(rng)


UNIFORM = SpeedSampler("uniform")
POSITIVE_EXPONENTIAL = SpeedSampler("exponential", positive=True)


def _survivors_with_retry(make_shots, rng) -> int:
    for _ in range(MAX_RETRIES):
        try:
            return len(resolve(make_shots(rng), validate=False).survivors)
        except SingularParameter:
            continue
    raise SingularParameter(f"{MAX_RETRIES} consecutive singular draws")


def sample_ru(n: int, speed_sampler: SpeedSampler, rng) -> int:
    if n == 0:
        return 0
    births = [mpq(t) for t in range(1, n + 1)]
    return _survivors_with_retry(lambda g: shots_from(speed_sampler.draw(g, n), births), rng)


def sample_rr(n: int, speed_sampler: SpeedSampler, delay_sampler: SpeedSampler, rng) -> int:
    if n == 0:
        return 0

    def make(g):
        speeds = speed_sampler.draw(g, n)
        delays = [d for d in delay_sampler.draw(g, n - 1)]
        if any(d <= 0 for d in delays):
            raise SingularParameter("zero delay")
        return shots_from(speeds, [mpq(0)] + list(accumulate(delays)))

    return _survivors_with_retry(make, rng)


def random_configuration(n: int, rng) -> Configuration:
    sigma = tuple(int(x) for x in rng.permutation(n))
    tau = tuple(int(x) for x in rng.permutation(max(n - 1, 0)))
    return Configuration(sigma, tau)


def sample_ff(p: Parameter, rng) -> int:
    require_generic(p)
    return len(resolve(realize(p, random_configuration(p.n, rng)), validate=False).survivors)


# --- fixed acceleration functions -------------------------------------------

def _table_function(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs[0] != 0 or ys[0] != 0 or np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise InvalidParameter("acceleration", "table must start at (0, 0) and increase strictly")

    def f(x):
        x = float(x)
        if x <= xs[-1]:
            return float(np.interp(x, xs, ys))
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        return float(ys[-1] + slope * (x - xs[-1]))
    return f


ACCELERATIONS = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
    "sqrt": lambda x: x ** 0.5,
    "one-minus-exp": lambda x: -math.expm1(-x),
}


@dataclass(frozen=True)
class ImpetusProblem:
    impetuses: Tuple[mpq, ...]
    delays: Tuple[mpq, ...]
    acceleration: str = "identity"
    table: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None

    def __post_init__(self):
        object.__setattr__(self, "impetuses", tuple(as_rational(x) for x in self.impetuses))
        object.__setattr__(self, "delays", tuple(as_rational(x) for x in self.delays))
        if len(set(self.impetuses)) != len(self.impetuses):
            raise InvalidParameter("impetuses", "impetuses must be distinct")
        if any(x <= 0 for x in self.impetuses):
            raise InvalidParameter("impetuses", "impetuses must be positive")
        if self.acceleration == "custom":
            if self.table is None:
                raise InvalidParameter("table", "custom acceleration needs a table")
            _table_function(*self.table)
        elif self.acceleration not in ACCELERATIONS:
            raise InvalidParameter("acceleration", f"unknown kind {self.acceleration!r}")

    @property
    def f(self) -> Callable[[float], float]:
        if self.acceleration == "custom":
            return _table_function(*self.table)
        return ACCELERATIONS[self.acceleration]

    def linear_parameter(self) -> Parameter:
        """The constant-speed problem with speeds equal to the impetuses."""
        return Parameter.from_unsorted(self.impetuses, self.delays)


def faf_survivors(ip: ImpetusProblem, c: Configuration):
    """Survivor set via the reduction ``(t, y) -> (t, f(y))`` to constant speeds.

    ``f`` is strictly increasing, so two curves meet exactly when the
    underlying straight trajectories do, at the same time.
    """
    return resolve(realize(ip.linear_parameter(), c), validate=False).survivors


_MP_ACCELERATIONS = {
    "identity": lambda mp, x: x,
    "square": lambda mp, x: x * x,
    "sqrt": lambda mp, x: mp.sqrt(x),
    "one-minus-exp": lambda mp, x: -mp.expm1(-x),
}


def faf_survivors_numeric(ip: ImpetusProblem, c: Configuration, dps: int = 50):
    """Audit path: meeting times found by bisection on the curved positions.

    Works on the actual positions ``f(I (t - T))`` in ``mpmath`` arithmetic and
    never inverts ``f``; the collision order is then replayed by an all-pairs
    minimum scan.
    """
    import mpmath

    shots = realize(ip.linear_parameter(), c)
    n = len(shots)
    with mpmath.workdps(dps):
        mp = mpmath.mp
        if ip.acceleration == "custom":
            f = ip.f
            fm = lambda x: mp.mpf(f(float(x)))
        else:
            g = _MP_ACCELERATIONS[ip.acceleration]
            fm = lambda x: g(mp, x)
        speed = [mp.mpf(int(s.speed.numerator)) / int(s.speed.denominator) for s in shots]
        birth = [mp.mpf(int(s.birth.numerator)) / int(s.birth.denominator) for s in shots]

        top = max(speed)

        def ahead(j, i, t):
            # 1 - e^{-x} needs about x / ln 10 extra digits before it saturates
            mp.dps = dps + int(top * t * 0.45) + 10
            if t <= birth[j]:
                return False
            return fm(speed[j] * (t - birth[j])) > fm(speed[i] * (t - birth[i]))

        def meet(i, j):
            # j is shot after i and is faster, so it overtakes i eventually
            lo = birth[j]
            hi = lo + 1
            while not ahead(j, i, hi):
                hi = lo + 2 * (hi - lo)
            for _ in range(3 * dps):
                mid = (lo + hi) / 2
                if ahead(j, i, mid):
                    hi = mid
                else:
                    lo = mid
            return hi

        times = {(i, j): meet(i, j) for i in range(n) for j in range(i + 1, n)
                 if shots[j].speed > shots[i].speed}
    live = set(range(n))
    while True:
        cand = [(t, pair) for pair, t in times.items() if pair[0] in live and pair[1] in live]
        if not cand:
            return frozenset(live)
        _, (i, j) = min(cand)
        live -= {i, j}


def sample_faf(ip: ImpetusProblem, rng) -> int:
    require_generic(ip.linear_parameter())
    return len(faf_survivors(ip, random_configuration(len(ip.impetuses), rng)))


# --- sorted flock -----------------------------------------------------------

def flock_run(speeds: Sequence) -> Tuple[int, List[int]]:
    """Final flock size and the sizes after each shot."""
    live: List = []          # decreasing, so the slowest is last
    sizes = []
    for v in speeds:
        if not live or v <= live[-1]:
            live.append(v)
        else:
            live.pop()
        sizes.append(len(live))
    return len(live), sizes


@njit(cache=True)
def _destruction_kernel(x, u, stack, depth, count, out, filled):
    pos = 0
    while pos < u.shape[0] and filled < out.shape[0]:
        v = u[pos]
        pos += 1
        count += 1
        if v <= stack[depth - 1]:
            if depth == stack.shape[0]:
                return pos, depth, count, filled, True
            stack[depth] = v
            depth += 1
        else:
            depth -= 1
            if depth == 0:
                out[filled] = count
                filled += 1
                count = 0
                stack[0] = x
                depth = 1
    return pos, depth, count, filled, False


def flock_destruction_times(x: float, size: int, rng, buffer: int = 1 << 20) -> np.ndarray:
    """``size`` i.i.d. copies of the number of uniform shots needed to destroy
    a flock whose slowest bullet has speed ``x``."""
    if not 0 <= x < 1:
        raise ValueError("x must lie in [0, 1)")
    out = np.zeros(size, dtype=np.int64)
    stack = np.empty(1 << 16, dtype=np.float64)
    stack[0] = x
    depth, count, filled = 1, 0, 0
    while filled < size:
        u = rng.random(buffer)
        start = 0
        while start < u.shape[0] and filled < size:
            used, depth, count, filled, full = _destruction_kernel(
                x, u[start:], stack, depth, count, out, filled)
            start += used
            if full:
                bigger = np.empty(2 * stack.shape[0], dtype=np.float64)
                bigger[: stack.shape[0]] = stack
                stack = bigger
                start -= 1
                count -= 1
    return out


def flock_destruction_time(x: float, rng) -> int:
    return int(flock_destruction_times(x, 1, rng, buffer=256)[0])


# --- odd cycles ---------------------------------------------------------------

def odd_cycle_count(perm: Sequence[int]) -> int:
    n = len(perm)
    seen = [False] * n
    odd = 0
    for i in range(n):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        odd += length & 1
    return odd


def sample_odd_cycles(n: int, size: int, rng) -> np.ndarray:
    """Odd-cycle counts of ``size`` uniform permutations of ``n``, without
    building them: the cycle through the smallest remaining element has a
    uniform length on ``1..m`` when ``m`` elements remain."""
    remaining = np.full(size, n, dtype=np.int64)
    odd = np.zeros(size, dtype=np.int64)
    active = np.nonzero(remaining)[0]
    while active.size:
        lengths = rng.integers(1, remaining[active] + 1)
        odd[active] += lengths & 1
        remaining[active] -= lengths
        active = active[remaining[active] > 0]
    return odd


# --- matrix extremes ------------------------------------------------------------

def matrix_extremes_run(entries) -> int:
    """Rounds in which the minimum of the remaining matrix sits on the diagonal."""
    M = np.asarray(entries)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    flat = M.ravel()
    if np.unique(flat).size != flat.size:
        raise ValueError("matrix entries must be distinct")
    removed = np.zeros(n, dtype=bool)
    left = n
    diagonal = 0
    for cell in np.argsort(flat, kind="stable"):
        i, j = divmod(int(cell), n)
        if removed[i] or removed[j]:
            continue
        if i == j:
            diagonal += 1
            removed[i] = True
            left -= 1
        else:
            removed[i] = removed[j] = True
            left -= 2
        if left == 0:
            break
    return diagonal


def sample_matrix(n: int, rng) -> int:
    while True:
        M = rng.random((n, n))
        if np.unique(M).size == n * n:
            return matrix_extremes_run(M)


# --- two-step tree ---------------------------------------------------------------

def two_step_distances(bernoullis: Sequence[int]) -> List[int]:
    """Red distances ``D_0..D_n`` for edge marks ``B_1..B_n`` (1 = red edge ``m -> m-1``)."""
    D = [0]
    for m, b in enumerate(bernoullis, start=1):
        if b:
            D.append(1 + D[m - 1])
        else:
            if m < 2:
                raise ValueError("B_1 must be 1 (edge 1 -> -1 does not exist)")
            D.append(D[m - 2])
    return D


def two_step_distance(bernoullis: Sequence[int]) -> int:
    return two_step_distances(bernoullis)[-1]


def two_step_bernoullis(n: int, rng) -> List[int]:
    u = rng.random(n)
    return [int(u[m - 1] * m < 1) for m in range(1, n + 1)]


def two_step_law(n: int) -> SurvivorDistribution:
    """Exact law of the red distance from ``n``, pushing mass down the tree.

    Mass at node ``m`` is kept as an integer weight scaled by ``n!/m!``: the red
    edge (probability ``1/m``) keeps the weight and the black edge (``1 - 1/m``)
    multiplies it by ``(m-1)^2``.
    """
    if n == 0:
        return SurvivorDistribution(0, {0: mpq(1)})
    rows = {n: [mpz(1)]}          # node -> weights indexed by red count
    for m in range(n, 0, -1):
        here = rows.pop(m, None)
        if here is None:
            continue
        red = rows.setdefault(m - 1, [])
        _add_into(red, here, 1, 1)
        if m >= 2:
            _add_into(rows.setdefault(m - 2, []), here, 0, (m - 1) ** 2)
    total = math.factorial(n)
    return SurvivorDistribution(n, {k: mpq(w, total) for k, w in enumerate(rows[0]) if w})


def _add_into(target, source, shift, factor):
    need = len(source) + shift
    if len(target) < need:
        target.extend([mpz(0)] * (need - len(target)))
    for k, w in enumerate(source):
        if w:
            target[k + shift] += factor * w


# --- empirical comparison ------------------------------------------------------------

def _pool(expected, observed, minimum=5.0):
    """Merge adjacent cells until each expected count reaches ``minimum``."""
    e_out, o_out = [], []
    e_acc = o_acc = 0.0
    for e, o in zip(expected, observed):
        e_acc += e
        o_acc += o
        if e_acc >= minimum:
            e_out.append(e_acc)
            o_out.append(o_acc)
            e_acc = o_acc = 0.0
    if e_acc or o_acc:
        if e_out:
            e_out[-1] += e_acc
            o_out[-1] += o_acc
        else:
            e_out.append(e_acc)
            o_out.append(o_acc)
    return np.array(e_out), np.array(o_out)


def compare_empirical(samples, reference: SurvivorDistribution):
    """(total variation, chi-square, p-value) of ``samples`` against ``reference``."""
    counts = Counter(samples) if not isinstance(samples, Counter) else samples
    N = sum(counts.values())
    if N == 0:
        raise EmptySample("no samples")
    probs = {k: float(p) for k, p in reference.probabilities().items()}
    keys = sorted(set(probs) | set(counts))
    tv = 0.5 * sum(abs(counts.get(k, 0) / N - probs.get(k, 0.0)) for k in keys)
    # cells of probability zero (wrong parity) are excluded from the chi-square
    support = sorted(probs)
    stray = N - sum(counts.get(k, 0) for k in support)
    if stray:
        return tv, math.inf, 0.0
    e, o = _pool([N * probs[k] for k in support], [counts.get(k, 0) for k in support])
    if len(e) < 2:
        return tv, 0.0, 1.0
    chi2, pval = stats.chisquare(o, e)
    return tv, float(chi2), float(pval)


# --- batched sampling -------------------------------------------------------------

BATCH_SIZE = 10_000


def _draw(model: str, n: int, rng, options):
    if model == "ru":
        return sample_ru(n, options.get("speeds", UNIFORM), rng)
    if model == "rr":
        return sample_rr(n, options.get("speeds", UNIFORM),
                         options.get("delays", POSITIVE_EXPONENTIAL), rng)
    if model == "ff":
        return sample_ff(options["parameter"], rng)
    if model == "faf":
        return sample_faf(options["problem"], rng)
    if model == "markov":
        from .law import sample_markov
        return sample_markov(n, rng)
    if model == "flock":
        return flock_run(rng.random(n))[0]
    if model == "cycles":
        return odd_cycle_count(rng.permutation(n))
    if model == "matrix":
        return sample_matrix(n, rng)
    if model == "tree":
        return two_step_distance(two_step_bernoullis(n, rng))
    raise ValueError(f"unknown model {model!r}")


def _batch(model, n, seed, index, size, options):
    rng = stream(seed, index)
    if model == "cycles-fast":
        return [int(x) for x in sample_odd_cycles(n, size, rng)]
    return [_draw(model, n, rng, options) for _ in range(size)]


def sample_many(model: str, n: int, samples: int, seed: int, jobs: int = 1,
                options: Optional[dict] = None, batch_size: int = BATCH_SIZE) -> List[int]:
    """``samples`` draws split into fixed batches; batch ``b`` uses stream ``(seed, b)``."""
    options = options or {}
    if model in ("ff", "faf"):
        key = "parameter" if model == "ff" else "problem"
        require_generic(options[key] if model == "ff" else options[key].linear_parameter())
    sizes = [min(batch_size, samples - s) for s in range(0, samples, batch_size)]
    args = [(model, n, seed, b, size, options) for b, size in enumerate(sizes)]
    if jobs <= 1 or len(args) <= 1:
        parts = [_batch(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_batch, *zip(*args)))
    return [k for part in parts for k in part]
