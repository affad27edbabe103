"""Generate the frozen Welch t-test reference fixtures.

Draws 20 sample pairs of varied size, scale, and distribution, runs the
scipy reference implementation once, and prints a Python module with the
pinned (samples, t, df, p) tuples.  The output is committed at
tests/welch_fixtures.py so the test suite never depends on scipy's result
changing.

Usage: python scripts/pin_ttest_fixtures.py > tests/welch_fixtures.py
"""

import numpy as np
import scipy.stats

rng = np.random.default_rng(20150601)

pairs = []
specs = [
    ("normal-same-scale", lambda n: rng.normal(0.0, 1.0, n), lambda n: rng.normal(0.4, 1.0, n)),
    ("normal-unequal-var", lambda n: rng.normal(10.0, 0.5, n), lambda n: rng.normal(11.0, 6.0, n)),
    ("exponential", lambda n: rng.exponential(3.0, n), lambda n: rng.exponential(9.0, n)),
    ("lognormal", lambda n: rng.lognormal(1.0, 0.8, n), lambda n: rng.lognormal(1.5, 1.2, n)),
    ("counts", lambda n: rng.poisson(2.0, n).astype(float), lambda n: rng.poisson(7.0, n).astype(float)),
    ("binary", lambda n: (rng.random(n) < 0.2).astype(float), lambda n: (rng.random(n) < 0.7).astype(float)),
    ("huge-scale", lambda n: rng.normal(160000, 30000, n), lambda n: rng.normal(39000, 15000, n)),
    ("tiny-n", lambda n: rng.normal(0, 1, n), lambda n: rng.normal(0.1, 2, n)),
    ("near-identical", lambda n: rng.normal(5, 1, n), lambda n: rng.normal(5, 1, n)),
    ("one-degenerate-ish", lambda n: rng.normal(0, 1e-6, n) + 1.0, lambda n: rng.normal(2.0, 1.0, n)),
]
sizes = [(50, 50), (5, 60), (12, 7), (30, 9), (25, 45), (8, 8), (40, 13), (3, 3), (21, 34), (17, 17)]

for (name, gen_a, gen_b), (n_a, n_b) in zip(specs * 2, sizes * 2):
    a = gen_a(n_a)
    b = gen_b(n_b)
    if np.var(a, ddof=1) == 0 and np.var(b, ddof=1) == 0:
        raise SystemExit(f"degenerate fixture drawn for {name}; reseed")
    result = scipy.stats.ttest_ind(a, b, equal_var=False)
    pairs.append((name, a.tolist(), b.tolist(), float(result.statistic), float(result.df), float(result.pvalue)))

print('"""Pinned Welch t-test reference values (scipy.stats.ttest_ind with')
print('equal_var=False, run once by scripts/pin_ttest_fixtures.py).  Each entry')
print('is (name, sample_a, sample_b, t, df, p)."""')
print()
print("FIXTURES = [")
for name, a, b, t, df, p in pairs:
    print(f"    (")
    print(f"        {name!r},")
    print(f"        {a!r},")
    print(f"        {b!r},")
    print(f"        {t!r},")
    print(f"        {df!r},")
    print(f"        {p!r},")
    print(f"    ),")
print("]")
