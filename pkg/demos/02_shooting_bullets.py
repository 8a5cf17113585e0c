"""
Resolving a shooting sequence
=============================

Builds a small sequence of bullets, resolves it exactly, then shows what
happens on a singular parameter and how the survivor count of successive
prefixes moves by one at a time.
"""
import json

from bullets import (Configuration, Parameter, find_critical_patterns, is_generic, realize,
                     resolve, survivor_trajectory)
from bullets.rng import rational_uniforms, stream

p = Parameter.from_json({"speeds": ["1/3", "1/2", "2", "5/2"], "delays": ["1", "7/3", "4/9"]})
c = Configuration(sigma=(2, 0, 3, 1), tau=(1, 0, 2))
shots = realize(p, c)
diagram = resolve(shots)
print(json.dumps(diagram.to_json(), indent=1))

# genericity: no three trajectories can ever meet at one point
print("generic:", is_generic(p))
bad = Parameter((1, 2, 3), (1, "1/3"))
for pattern in find_critical_patterns(bad):
    print("critical pattern", pattern.to_json())

# prefix survivor counts with uniform speeds and unit delays
g = stream(1)
n = 400
sizes = survivor_trajectory(rational_uniforms(g, n), [1] * (n - 1), n)
print("first sizes", sizes[:20])
print("steps all +-1:", all(abs(b - a) == 1 for a, b in zip(sizes, sizes[1:])))
# `bullets trajectory --n 5000` writes the full series as CSV
