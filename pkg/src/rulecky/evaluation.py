"""EVALB-like labelled bracket scoring and rule coverage reports.

Constituents are ``(i, j, label)`` triples of internal nodes; preterminals
are ignored and the root is counted.  Compound ``A::B`` labels are expanded
into one bracket per part.  No punctuation is deleted.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import YieldMismatch
from .grammar import CoverageStats, RuleSet, extract_rules, rule_coverage
from .treebank import CHAIN_SEP, BinaryTree, Tree


@dataclass(frozen=True)
class EvalResult:
    matched: int
    gold_total: int
    pred_total: int

    @property
    def LR(self) -> float:
        return 100.0 * self.matched / self.gold_total if self.gold_total else 0.0

    @property
    def LP(self) -> float:
        return 100.0 * self.matched / self.pred_total if self.pred_total else 0.0

    @property
    def F1(self) -> float:
        lr, lp = self.LR, self.LP
        return 2 * lp * lr / (lp + lr) if lp + lr else 0.0

    def tsv(self) -> str:
        return f"{self.matched}\t{self.gold_total}\t{self.pred_total}\t{self.LR:.2f}\t{self.LP:.2f}\t{self.F1:.2f}"

    def summary(self) -> str:
        return (f"matched={self.matched} gold={self.gold_total} pred={self.pred_total} "
                f"LR={self.LR:.2f} LP={self.LP:.2f} F1={self.F1:.2f}")


def constituents(tree: Tree) -> Counter:
    """Multiset of labelled brackets over internal nodes."""
    brackets: Counter = Counter()

    def walk(node, start):
        if node.is_leaf:
            return start + 1
        end = start
        for child in node.children:
            end = walk(child, end)
        for part in node.label.split(CHAIN_SEP):
            brackets[start, end, part] += 1
        return end

    walk(tree, 0)
    return brackets


def evaluate(gold: Sequence[Tree], pred: Sequence[Tree]) -> EvalResult:
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold trees but {len(pred)} predicted trees")
    matched = gold_total = pred_total = 0
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise YieldMismatch(k, f"sentence {k}: gold has {len(g)} words, prediction {len(p)}")
        gc, pc = constituents(g), constituents(p)
        matched += sum((gc & pc).values())
        gold_total += sum(gc.values())
        pred_total += sum(pc.values())
    return EvalResult(matched, gold_total, pred_total)


def coverage_report(train_rules: RuleSet, eval_corpus: Iterable[BinaryTree]) -> CoverageStats:
    return rule_coverage(train_rules, extract_rules(eval_corpus))
