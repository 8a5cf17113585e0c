"""The survivor-count law ``q_n``, its moments and the memory-2 Markov sampler.

``q_n`` is fixed by ``q_0 = delta_0``, ``q_1 = delta_1`` and

    q_N(k) = q_{N-1}(k-1) / N + (1 - 1/N) q_{N-2}(k),     N >= 2.

Multiplying by ``N!`` gives an integer recurrence
``a_N(k) = a_{N-1}(k-1) + (N-1)^2 a_{N-2}(k)`` (``a_N(k)`` counts permutations
of ``N`` with ``k`` odd cycles), which is what :func:`q_exact` runs.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from gmpy2 import mpq

from .errors import SizeLimit
from .geometry import format_rational

DEFAULT_EXACT_MAX_N = 5000


@dataclass
class SurvivorDistribution:
    """Exact law of the number of survivors.

    ``mass`` maps ``k`` to a rational probability, or to an integer count when
    ``total`` is set (enumeration mode).
    """

    n: int
    mass: Dict[int, object]
    total: Optional[int] = None
    floating: bool = False
    meta: dict = field(default_factory=dict)

    def probability(self, k) -> mpq:
        m = self.mass.get(k, 0)
        if self.total is not None:
            return mpq(m, self.total)
        return mpq(m) if not self.floating else m

    def probabilities(self) -> Dict[int, mpq]:
        return {k: self.probability(k) for k in sorted(self.mass) if self.mass[k]}

    def support(self):
        return sorted(k for k, m in self.mass.items() if m)

    def to_json(self) -> dict:
        out = {"n": self.n}
        if self.total is not None:
            out["counts"] = {str(k): int(self.mass[k]) for k in self.support()}
            out["total"] = self.total
        else:
            fmt = (lambda x: float(x)) if self.floating else format_rational
            out["mass"] = {str(k): fmt(self.mass[k]) for k in self.support()}
        if self.floating:
            out["floating"] = True
        return out


def _max_n(max_n):
    if max_n is not None:
        return max_n
    return int(os.environ.get("BULLETS_MAX_N_EXACT", DEFAULT_EXACT_MAX_N))


def odd_cycle_counts(n: int):
    """``a_n(k)`` for ``k = 0..n``: permutations of ``n`` with ``k`` odd cycles."""
    prev2, prev1 = [1], [0, 1]
    if n == 0:
        return prev2
    for N in range(2, n + 1):
        c = (N - 1) * (N - 1)
        cur = [0] * (N + 1)
        for k in range(N + 1):
            a = prev1[k - 1] if 1 <= k <= N else 0
            b = prev2[k] if k <= N - 2 else 0
            cur[k] = a + c * b
        prev2, prev1 = prev1, cur
    return prev1


def q_exact(n: int, max_n: Optional[int] = None) -> SurvivorDistribution:
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > _max_n(max_n):
        raise SizeLimit(f"exact law limited to n <= {_max_n(max_n)}; use floating moments")
    counts = odd_cycle_counts(n)
    fact = math.factorial(n)
    return SurvivorDistribution(n, {k: mpq(a, fact) for k, a in enumerate(counts) if a})


def q_exact_rational_recurrence(n: int) -> Dict[int, mpq]:
    """The recurrence run literally in rationals (independent of the integer form)."""
    prev2, prev1 = {0: mpq(1)}, {1: mpq(1)}
    if n == 0:
        return prev2
    for N in range(2, n + 1):
        cur = {}
        for k in range(N + 1):
            val = prev1.get(k - 1, 0) * mpq(1, N) + prev2.get(k, 0) * (1 - mpq(1, N))
            if val:
                cur[k] = val
        prev2, prev1 = prev1, cur
    return prev1


def zero_product(m: int) -> mpq:
    """``prod_{i<=m} (1 - 1/(2i))``, the closed form of ``q_{2m}(0)``."""
    out = mpq(1)
    for i in range(1, m + 1):
        out *= 1 - mpq(1, 2 * i)
    return out


def decomposition(n: int, k: int) -> mpq:
    """``q_{n-1}(k-1)/n + (1-1/n) q_{n-2}(k)``: the zero-minimal-speed split."""
    a = q_exact(n - 1).mass.get(k - 1, 0) if n >= 1 else 0
    b = q_exact(n - 2).mass.get(k, 0) if n >= 2 else 0
    return mpq(1, n) * a + (1 - mpq(1, n)) * b


def factorial_moments(n: int, order: int = 3):
    """``E[(X_n)_r]`` for ``r = 0..order`` in double precision.

    From ``(Y+1)_r = (Y)_r + r (Y)_{r-1}`` the chain gives
    ``F_r(N) = (F_r(N-1) + r F_{r-1}(N-1)) / N + (1 - 1/N) F_r(N-2)``.
    """
    prev2 = [1.0] + [0.0] * order
    prev1 = [1.0, 1.0] + [0.0] * (order - 1)
    if n == 0:
        return prev2
    for N in range(2, n + 1):
        w = 1.0 / N
        cur = [1.0] * (order + 1)
        for r in range(1, order + 1):
            cur[r] = (prev1[r] + r * prev1[r - 1]) * w + (1.0 - w) * prev2[r]
        prev2, prev1 = prev1, cur
    return prev1


def central_moments_floating(n: int) -> Tuple[float, float, float]:
    """Mean, variance and skewness of ``q_n`` via the factorial-moment recurrence."""
    F = factorial_moments(n, 3)
    m1 = F[1]
    m2 = F[2] + F[1]
    m3 = F[3] + 3 * F[2] + F[1]
    var = m2 - m1 * m1
    c3 = m3 - 3 * m1 * m2 + 2 * m1 ** 3
    return m1, var, c3 / var ** 1.5 if var > 0 else 0.0


def q_moments(n: int, mode: str = "exact", max_n: Optional[int] = None):
    """(mean, variance) of ``q_n``; ``mode`` is ``"exact"`` or ``"floating"``."""
    if mode == "floating":
        m, v, _ = central_moments_floating(n)
        return m, v
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    dist = q_exact(n, max_n)
    mean = sum((k * p for k, p in dist.mass.items()), mpq(0))
    second = sum((k * k * p for k, p in dist.mass.items()), mpq(0))
    return mean, second - mean * mean


def sample_markov(n: int, rng) -> int:
    """One draw of ``X_n`` with ``X_m = B_{1/m}(1 + X_{m-1}) + (1 - B_{1/m}) X_{m-2}``."""
    if n == 0:
        return 0
    u = rng.random(n)
    x2, x1 = 0, 0   # X_{m-2}, X_{m-1}, starting at X_{-1}, X_0
    for m in range(1, n + 1):
        x = 1 + x1 if u[m - 1] * m < 1 else x2
        x2, x1 = x1, x
    return x1


def q_floating(n: int):
    """``q_n`` in double precision (numpy array indexed by ``k``), for ``n`` past the exact bound."""
    import numpy as np

    prev2 = np.zeros(n + 1)
    prev1 = np.zeros(n + 1)
    prev2[0] = 1.0
    if n == 0:
        return prev2
    prev1[1] = 1.0
    for N in range(2, n + 1):
        cur = np.zeros(n + 1)
        cur[1:N + 1] = prev1[:N] / N
        cur[:N - 1] += (1.0 - 1.0 / N) * prev2[:N - 1]
        prev2, prev1 = prev1, cur
    return prev1
