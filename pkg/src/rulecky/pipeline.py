"""Glue between treebank files, the scorer and the decoders."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .chart import cky_fast, decode_tree
from .evaluation import evaluate
from .grammar import RuleSet, RuleTensor, build_rule_tensor, extract_rules
from .rule_decoder import DecodeInfo, parse_with_rules
from .scorer import ScorerModel, encode, score_spans
from .trainer import GoldAnnotation
from .treebank import (
    BinaryTree,
    LabelingScheme,
    LabelVocab,
    Tree,
    binarize_left,
    build_vocab,
    debinarize,
    prepare_tree,
)


@dataclass
class PreparedCorpus:
    trees: list[Tree]          # cleaned, unary-collapsed
    binary: list[BinaryTree]
    vocab: LabelVocab
    scheme: LabelingScheme

    def rules(self) -> RuleSet:
        return extract_rules(self.binary)

    def gold(self) -> list[tuple[list[str], GoldAnnotation]]:
        return [(t.words(), GoldAnnotation(b)) for t, b in zip(self.trees, self.binary)]


def prepare_corpus(trees: Sequence[Tree], scheme=LabelingScheme.DollarOnly,
                   vocab: Optional[LabelVocab] = None) -> PreparedCorpus:
    """Clean, collapse unary chains, build (or reuse) the vocab, binarize."""
    scheme = LabelingScheme.parse(scheme)
    prepared = [p for p in (prepare_tree(t) for t in trees) if p is not None]
    if vocab is None:
        vocab = build_vocab(prepared, scheme)
    binary = [binarize_left(t, scheme, vocab) for t in prepared]
    return PreparedCorpus(prepared, binary, vocab, scheme)


def extend_vocab(vocab: LabelVocab, trees: Sequence[Tree], scheme) -> LabelVocab:
    """Append labels of ``trees`` missing from ``vocab``; existing ids are kept."""
    extra = build_vocab(trees, scheme)
    return LabelVocab(list(vocab.labels) + [l for l in extra.labels if l not in vocab])


class Parser:
    def __init__(self, model: ScorerModel, vocab: LabelVocab, rules: Optional[RuleTensor] = None):
        if model.num_labels != len(vocab):
            raise ValueError(f"model scores {model.num_labels} labels, vocab has {len(vocab)}")
        self.model = model
        self.vocab = vocab
        self.rules = rules

    @classmethod
    def from_ruleset(cls, model, vocab, ruleset: RuleSet):
        return cls(model, vocab, build_rule_tensor(ruleset, vocab))

    def scores(self, words):
        return score_spans(self.model, encode(self.model, words))

    def parse_binary(self, words, decoder="rule-based", fallback=True) -> tuple[BinaryTree, DecodeInfo]:
        scores = self.scores(words)
        if decoder == "rule-based":
            return parse_with_rules(scores, self.rules, fallback=fallback, words=words)
        if decoder != "unconstrained":
            raise ValueError(f"unknown decoder {decoder!r}")
        chart = cky_fast(scores)
        tree = decode_tree(scores, chart, words)
        return tree, DecodeInfo(False, chart.score, sum(1 for _ in tree.productions()))

    def parse(self, words, pos=None, decoder="rule-based", fallback=True) -> tuple[Tree, DecodeInfo]:
        btree, info = self.parse_binary(words, decoder, fallback)
        pos = list(pos) if pos is not None else ["XX"] * len(words)
        return debinarize(btree, self.vocab, pos, words), info

    def evaluate(self, gold_trees: Sequence[Tree], decoder="rule-based"):
        preds = [self.parse(t.words(), t.pos(), decoder)[0] for t in gold_trees]
        return evaluate(gold_trees, preds), preds
