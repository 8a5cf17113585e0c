"""
Exhaustive counting over configurations
=======================================

For a generic parameter every assignment of speeds and delays is resolved.
The law of the number of survivors never depends on the parameter, but which
bullets survive does.
"""
from bullets import enumerate_ff, q_exact
from bullets.enumeration import CrossingSet, Side, enumerate_constrained
from bullets.verify import seeded_constrained, seeded_parameters

for p in seeded_parameters(5, 3, seed=2):
    table = enumerate_ff(p)
    print([str(v) for v in p.speeds], table.counts, "survival by shot position", table.by_position)
print("q_5 scaled:", {k: p * 2880 for k, p in q_exact(5).mass.items()})

# the constrained left/right models give the same per-k counts
cp = seeded_constrained(5, 1, seed=2)[0]
for s in (0, cp.height / 2, cp.height):
    for A in CrossingSet:
        c = cp.with_constraint(s=s, A=A)
        left = enumerate_constrained(c, Side.LEFT).counts
        right = enumerate_constrained(c, Side.RIGHT).counts
        print(f"s={s} A={A.value}: left {left} right {right}")
