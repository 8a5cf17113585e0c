"""
How long a flock lives
======================

Shoot uniform speeds at a flock whose slowest bullet has speed x and count
the shots until it is gone.  The mean is 1/(1-x)^2.
"""
import math

import numpy as np

from bullets.models import flock_destruction_times, flock_run, two_step_bernoullis, two_step_distances
from bullets.rng import stream

g = stream(5)
for x in (0.0, 0.25, 0.5, 0.75, 0.9):
    t = flock_destruction_times(x, 200_000, g)
    print(f"x={x:4}: mean {t.mean():8.3f}  1/(1-x)^2 = {1 / (1 - x) ** 2:8.3f}  "
          f"se {t.std() / math.sqrt(t.size):.3f}  median {np.median(t):.0f}")

# the flock keeps emptying out
_, sizes = flock_run(g.random(100_000))
print("returns to an empty flock:", sizes.count(0), "largest flock:", max(sizes))

# red distances in the two-step tree never decrease along even or odd nodes
D = two_step_distances(two_step_bernoullis(40, g))
print("even", D[0::2])
print("odd ", D[1::2])
