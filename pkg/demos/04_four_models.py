"""
Random bullets and their combinatorial twins
============================================

Monte Carlo samples from the random bullet models and from the flock, odd
cycle, matrix and two-step tree models, each compared with q_n.
"""
from bullets import ImpetusProblem, compare_empirical, q_exact, sample_many
from bullets.verify import seeded_parameters

n, samples = 8, 20_000
law = q_exact(n)
p = seeded_parameters(n, 1, seed=3)[0]
options = {
    "ru": {}, "rr": {}, "ff": {"parameter": p},
    "faf": {"problem": ImpetusProblem(p.speeds, p.delays, "one-minus-exp")},
    "flock": {}, "cycles": {}, "matrix": {}, "tree": {},
}
for model, opts in options.items():
    draws = sample_many(model, n, samples, seed=11, options=opts)
    tv, chi2, pval = compare_empirical(draws, law)
    print(f"{model:7s} tv {tv:.4f} chi2 {chi2:6.2f} p {pval:.3f}")

# the same runs from the command line:
#   bullets simulate --model rr --n 8 --samples 100000
#   bullets alt --model matrix --n 8 --samples 100000
