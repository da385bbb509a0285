"""
Sequential vs vectorized charts
===============================

The fast decoders fill every span of one width with a single batch of array
operations, so the number of bulk steps is n - 1 however many spans there
are.  Their tables are bit-identical to the loop-based reference.
"""

import time

import numpy as np

from rulecky import (
    LabelVocab,
    RuleSet,
    SpanScores,
    build_rule_tensor,
    cky_fast,
    cky_sequential,
    rule_cky_fast,
    rule_cky_sequential,
)

rng = np.random.default_rng(0)
nlab = 8
vocab = LabelVocab(["@"] + [f"X{k}" for k in range(1, nlab)])
rules = RuleSet({tuple(int(x) for x in rng.integers(0, nlab, 3)): 1 for _ in range(30)})
tensor = build_rule_tensor(rules, vocab)


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, 1000 * (time.perf_counter() - start)


print(f"{'n':>3} {'seq ms':>8} {'fast ms':>8} {'rule seq':>9} {'rule fast':>9} {'steps':>5}  same")
for n in (5, 10, 20, 40):
    scores = SpanScores.random(n, nlab, rng)
    a, t1 = timed(lambda: cky_sequential(scores))
    b, t2 = timed(lambda: cky_fast(scores))
    c, t3 = timed(lambda: rule_cky_sequential(scores, rules))
    d, t4 = timed(lambda: rule_cky_fast(scores, tensor))
    same = a.same_tables(b) and c.same_tables(d)
    print(f"{n:>3} {t1:8.2f} {t2:8.2f} {t3:9.2f} {t4:9.2f} {d.steps:>5}  {same}")
