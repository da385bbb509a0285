"""CKY decoding restricted to binary productions seen in training.

The chart carries a label dimension: ``t[i, j, l]`` is the best score of a
subtree over ``(i, j)`` rooted in ``l`` whose productions all belong to the
rule set.  ``K[i, j, l]`` and ``rule[i, j, l]`` record the split and the rule
slot (index into the parent's row of the :class:`RuleTensor`) that achieve it.

Minus infinity is the finite sentinel :data:`NEG`.  Any candidate at or below
``NEG / 2`` is clamped back to ``NEG`` so unreachable cells never drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chart import SpanScores, _assemble, cky_fast, decode_tree
from .errors import DimensionMismatch, EmptyRuleSet, NoDerivation
from .grammar import RuleSet, RuleTensor
from .treebank import BinaryTree

NEG = -1e18
SCORE_LIMIT = 1e12


def _check(scores: SpanScores):
    scores.check_finite()
    if np.abs(scores.upper()).max() >= SCORE_LIMIT:
        raise ValueError(f"span scores must stay below {SCORE_LIMIT:g} in magnitude")


@dataclass(frozen=True)
class RuleChartResult:
    t: np.ndarray
    K: np.ndarray
    rule: np.ndarray
    steps: int = 0
    reductions: int = 0

    @property
    def n(self) -> int:
        return self.t.shape[0] - 1

    @property
    def root_scores(self) -> np.ndarray:
        return self.t[0, self.n]

    @property
    def score(self) -> float:
        return float(self.root_scores.max())

    @property
    def parsable(self) -> bool:
        return bool(self.root_scores.max() > NEG / 2)

    def same_tables(self, other: "RuleChartResult") -> bool:
        return (np.array_equal(self.t, other.t) and np.array_equal(self.K, other.K)
                and np.array_equal(self.rule, other.rule))


def rule_cky_sequential(scores: SpanScores, ruleset: RuleSet) -> RuleChartResult:
    if len(ruleset) == 0:
        raise EmptyRuleSet("rule-based decoding needs at least one rule")
    _check(scores)
    n, nlab = scores.n, scores.num_labels
    grouped = ruleset.by_parent()
    if max(max(r) for r in ruleset) >= nlab:
        raise DimensionMismatch("rule set references labels beyond the score chart")
    s = scores.data.tolist()
    t = [[[0.0] * nlab for _ in range(n + 1)] for _ in range(n + 1)]
    K = np.full((n + 1, n + 1, nlab), -1, dtype=np.int64)
    rule = np.full((n + 1, n + 1, nlab), -1, dtype=np.int64)
    for i in range(n):
        t[i][i + 1] = list(s[i][i + 1])
    for ss in range(2, n + 1):
        for i in range(n - ss + 1):
            j = i + ss
            for lab in range(nlab):
                base = s[i][j][lab]
                pairs = grouped.get(lab, ())
                best_k, best_r, best = i + 1, 0, base + (NEG + NEG)
                found = False
                for k in range(i + 1, j):
                    left, right = t[i][k], t[k][j]
                    for r, (l1, l2) in enumerate(pairs):
                        cand = base + (left[l1] + right[l2])
                        if not found or cand > best:
                            best_k, best_r, best, found = k, r, cand, True
                t[i][j][lab] = NEG if best <= NEG / 2 else best
                K[i, j, lab] = best_k
                rule[i, j, lab] = best_r
    return RuleChartResult(np.array(t), K, rule)


def rule_cky_fast(scores: SpanScores, rules: RuleTensor) -> RuleChartResult:
    _check(scores)
    n, nlab = scores.n, scores.num_labels
    if rules.num_labels != nlab or rules.pad_id != nlab:
        raise DimensionMismatch(f"rule table built for {rules.num_labels} labels, chart has {nlab}")
    if int(rules.valid_counts.sum()) == 0:
        raise EmptyRuleSet("rule table holds no rules")
    s = scores.flat()
    # extra column at index pad_id is the -inf target of padded rule slots
    t = np.full((n * n, nlab + 1), NEG)
    K = np.full((n * n, nlab), -1, dtype=np.int64)
    rule = np.full((n * n, nlab), -1, dtype=np.int64)
    diag = np.arange(n) * n + np.arange(n)
    t[diag, :nlab] = s[diag]
    left_ids = rules.table[None, :, None, :, 1]
    right_ids = rules.table[None, :, None, :, 2]
    steps = reductions = 0
    for ss in range(2, n + 1):
        starts = np.arange(n - ss + 1)
        I = (starts * n + starts + ss - 1)[:, None]
        L = I + np.arange(1 - ss, 0)[None, :]
        R = I + np.arange(1, ss)[None, :] * n
        I = I[:, 0]
        # (spans, labels, splits, rule slots)
        t1 = t[L[:, None, :, None], left_ids]
        t2 = t[R[:, None, :, None], right_ids]
        cand = s[I][:, :, None, None] + (t1 + t2)
        best_rule = cand.argmax(axis=-1)
        per_split = np.take_along_axis(cand, best_rule[..., None], axis=-1)[..., 0]
        best_split = per_split.argmax(axis=-1)
        value = np.take_along_axis(per_split, best_split[..., None], axis=-1)[..., 0]
        reductions += 2
        t[I, :nlab] = np.where(value <= NEG / 2, NEG, value)
        K[I] = starts[:, None] + 1 + best_split
        rule[I] = np.take_along_axis(best_rule, best_split[..., None], axis=-1)[..., 0]
        steps += 1
    t2d = np.zeros((n + 1, n + 1, nlab))
    t2d[:-1, 1:] = t[:, :nlab].reshape(n, n, nlab)
    for i in range(n + 1):
        t2d[i, : i + 1] = 0.0
    K2 = np.full((n + 1, n + 1, nlab), -1, dtype=np.int64)
    K2[:-1, 1:] = K.reshape(n, n, nlab)
    R2 = np.full((n + 1, n + 1, nlab), -1, dtype=np.int64)
    R2[:-1, 1:] = rule.reshape(n, n, nlab)
    return RuleChartResult(t2d, K2, R2, steps, reductions)


def rule_decode_tree(scores: SpanScores, chart: RuleChartResult, rules: RuleTensor,
                     words: Optional[Sequence[str]] = None) -> BinaryTree:
    """Follow split points and rule slots down from the best root label."""
    n = scores.n
    root_label = int(chart.root_scores.argmax())
    if chart.root_scores[root_label] <= NEG / 2:
        raise NoDerivation(f"no rule-conforming tree over {n} words")
    labels = {}
    splits = {}
    order = []
    stack = [(0, n, root_label)]
    while stack:
        i, j, lab = stack.pop()
        order.append((i, j))
        labels[i, j] = lab
        if j - i > 1:
            k = int(chart.K[i, j, lab])
            _, l1, l2 = rules.rule(lab, int(chart.rule[i, j, lab]))
            splits[i, j] = k
            stack.append((k, j, l2))
            stack.append((i, k, l1))
    return _assemble(order, splits, lambda i, j: labels[i, j], words)


@dataclass(frozen=True)
class DecodeInfo:
    fallback: bool
    root_score: float
    rule_count: int


def parse_with_rules(scores: SpanScores, rules: RuleTensor, fallback=True,
                     words: Optional[Sequence[str]] = None) -> tuple[BinaryTree, DecodeInfo]:
    """Rule-constrained parse; optionally fall back to unconstrained CKY on NoDerivation."""
    chart = rule_cky_fast(scores, rules)
    if chart.parsable:
        tree = rule_decode_tree(scores, chart, rules, words)
        return tree, DecodeInfo(False, chart.score, sum(1 for _ in tree.productions()))
    if not fallback:
        raise NoDerivation(f"no rule-conforming tree over {scores.n} words")
    plain = cky_fast(scores)
    tree = decode_tree(scores, plain, words)
    return tree, DecodeInfo(True, plain.score, sum(1 for _ in tree.productions()))
