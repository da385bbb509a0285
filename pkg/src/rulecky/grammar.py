"""Binary rule extraction, the padded rule table, and rule coverage."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyRuleSet, EmptyTestSet, UnknownLabel
from .treebank import BinaryTree, LabelVocab


class RuleSet:
    """Counts of binary productions ``(parent, left, right)`` over label ids."""

    def __init__(self, rules: Mapping[tuple[int, int, int], int] | None = None):
        self.rules: dict[tuple[int, int, int], int] = {}
        for key, count in (rules or {}).items():
            if count < 1:
                raise ValueError(f"rule {key} has count {count}")
            self.rules[tuple(int(x) for x in key)] = int(count)

    def __len__(self):
        return len(self.rules)

    def __contains__(self, rule):
        return tuple(rule) in self.rules

    def __iter__(self):
        return iter(self.rules)

    def __eq__(self, other):
        return isinstance(other, RuleSet) and self.rules == other.rules

    def __repr__(self):
        return f"RuleSet({len(self.rules)} rules)"

    def count(self, rule) -> int:
        return self.rules.get(tuple(rule), 0)

    def total(self) -> int:
        return sum(self.rules.values())

    def by_parent(self) -> dict[int, list[tuple[int, int]]]:
        """Children pairs of every parent, ascending by (left, right)."""
        out: dict[int, list[tuple[int, int]]] = {}
        for parent, left, right in sorted(self.rules):
            out.setdefault(parent, []).append((left, right))
        return out

    def to_strings(self, vocab: LabelVocab):
        return {
            (vocab.label(p), vocab.label(l), vocab.label(r)): c
            for (p, l, r), c in self.rules.items()
        }

    def save(self, path, vocab: LabelVocab):
        with open(path, "w", encoding="utf-8") as f:
            for (p, l, r), c in sorted(self.rules.items()):
                f.write(f"{vocab.label(p)}\t{vocab.label(l)}\t{vocab.label(r)}\t{c}\n")

    @classmethod
    def load(cls, path, vocab: LabelVocab) -> "RuleSet":
        rules: Counter = Counter()
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) != 4:
                    raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
                try:
                    key = tuple(vocab.id(x) for x in fields[:3])
                except UnknownLabel as e:
                    raise UnknownLabel(f"{path}:{lineno}: label {e.args[0]!r} not in vocabulary") from None
                rules[key] += int(fields[3])
        return cls(rules)


def extract_rules(corpus: Iterable[BinaryTree]) -> RuleSet:
    counts: Counter = Counter()
    for tree in corpus:
        counts.update(tree.productions())
    return RuleSet(counts)


@dataclass(frozen=True)
class RuleTensor:
    """Per-parent rule table of shape (|L|, Rmax, 3).

    Row ``table[p, r]`` is ``(p, left, right)`` for ``r < valid_counts[p]``; the
    rest of the row holds ``pad_id`` in every column.
    """

    table: np.ndarray
    valid_counts: np.ndarray
    pad_id: int

    @property
    def rmax(self) -> int:
        return self.table.shape[1]

    @property
    def num_labels(self) -> int:
        return self.table.shape[0]

    def rule(self, parent: int, slot: int) -> tuple[int, int, int]:
        if slot >= self.valid_counts[parent]:
            raise IndexError(f"slot {slot} is padding for label {parent}")
        return tuple(int(x) for x in self.table[parent, slot])

    def to_ruleset(self) -> RuleSet:
        return RuleSet({
            self.rule(p, r): 1
            for p in range(self.num_labels)
            for r in range(int(self.valid_counts[p]))
        })


def build_rule_tensor(ruleset: RuleSet, vocab: LabelVocab) -> RuleTensor:
    if len(ruleset) == 0:
        raise EmptyRuleSet("cannot build a rule table from an empty rule set")
    nlab = len(vocab)
    grouped = ruleset.by_parent()
    for parent, pairs in grouped.items():
        if parent >= nlab or any(x >= nlab for pair in pairs for x in pair):
            raise UnknownLabel(f"rule under parent {parent} references a label outside the vocabulary")
    rmax = max(len(pairs) for pairs in grouped.values())
    pad = vocab.pad_id
    table = np.full((nlab, rmax, 3), pad, dtype=np.int64)
    valid = np.zeros(nlab, dtype=np.int64)
    for parent, pairs in grouped.items():
        valid[parent] = len(pairs)
        for slot, (left, right) in enumerate(pairs):
            table[parent, slot] = (parent, left, right)
    table.setflags(write=False)
    valid.setflags(write=False)
    return RuleTensor(table, valid, pad)


@dataclass(frozen=True)
class CoverageStats:
    raw_recall: float
    weighted_recall: float
    unseen_rule_count: int
    test_rule_count: int

    def format(self) -> str:
        return f"{self.raw_recall:.6f}\t{self.weighted_recall:.6f}\t{self.unseen_rule_count}"


def rule_coverage(train: RuleSet, test: RuleSet) -> CoverageStats:
    if len(test) == 0:
        raise EmptyTestSet("test rule set is empty")
    seen = [r for r in test if r in train]
    weighted = sum(test.count(r) for r in seen) / test.total()
    return CoverageStats(
        raw_recall=len(seen) / len(test),
        weighted_recall=weighted,
        unseen_rule_count=len(test) - len(seen),
        test_rule_count=len(test),
    )
