"""
The survivor-count law q_n
==========================

Exact values from the recurrence, the closed form for q_2m(0), and how the
mean and variance grow like (1/2) log n.
"""
import math

from bullets import q_exact, q_moments, zero_product
from bullets.law import central_moments_floating, q_exact_rational_recurrence

# first few laws, as exact rationals
for n in range(1, 7):
    law = q_exact(n)
    print(n, {k: str(p) for k, p in law.probabilities().items()})

# the integer route (odd cycles of permutations) and the plain rational
# recurrence give the same numbers
assert q_exact(40).mass == q_exact_rational_recurrence(40)

# q_2m(0) is a product of (1 - 1/2i)
for m in (1, 2, 5, 50):
    print(f"q_{2 * m}(0) = {q_exact(2 * m).mass[0]}  product = {zero_product(m)}")

# exact moments for moderate n, double precision beyond that
print("n=200 exact mean/variance:", [float(x) for x in q_moments(200)])
for e in range(3, 8):
    n = 10 ** e
    mean, var, skew = central_moments_floating(n)
    print(f"n=10^{e}: mean {mean:.3f} var {var:.3f} skew {skew:.3f} (1/2) ln n {0.5 * math.log(n):.3f}")
# the skewness shrinks very slowly, roughly like a power of 1/log n
