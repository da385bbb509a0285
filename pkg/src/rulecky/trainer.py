"""Max-margin training of the span scorer with a rule-less and a rule-based decoder.

For a gold tree ``T*`` each decoder finds the tree maximising
``S(T) + Delta(T, T*)`` where ``Delta`` counts labelled spans of ``T`` absent
from ``T*``.  The hinge loss is that maximum minus ``S(T*)``, floored at zero,
and the joint loss mixes the two decoders' losses with weight ``lam``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .chart import SpanScores, cky_fast, decode_tree, tree_score
from .errors import DimensionMismatch, NoDerivation
from .grammar import RuleTensor
from .rule_decoder import rule_cky_fast, rule_decode_tree
from .scorer import ScorerModel, backward, encode, score_spans
from .treebank import BinaryTree, labeled_spans

__all__ = [
    "Mode", "TrainConfig", "GoldAnnotation", "EpochStats", "hamming_augment",
    "tree_score", "hinge_loss", "joint_loss", "loss_and_grad", "train",
]


class Mode(enum.Enum):
    Conventional = "conventional"
    RuleBased = "rule-based"


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.4
    learning_rate: float = 0.01
    epochs: int = 20
    batch_size: int = 16
    seed: int = 777

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be at least 1")

    _KEYS = {"lambda": "lam", "lr": "learning_rate", "epochs": "epochs",
             "batch": "batch_size", "seed": "seed"}

    @classmethod
    def from_text(cls, text: str, **overrides) -> "TrainConfig":
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or key not in cls._KEYS:
                raise ValueError(f"line {lineno}: expected one of {sorted(cls._KEYS)} as key=value")
            attr = cls._KEYS[key]
            values[attr] = float(value) if attr in ("lam", "learning_rate") else int(value)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def load(cls, path, **overrides) -> "TrainConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_text(f.read(), **overrides)

    def to_text(self) -> str:
        return (f"lambda={self.lam}\nlr={self.learning_rate}\nepochs={self.epochs}\n"
                f"batch={self.batch_size}\nseed={self.seed}\n")


@dataclass(frozen=True)
class GoldAnnotation:
    btree: BinaryTree
    span_set: frozenset = field(default=None)

    def __post_init__(self):
        if self.span_set is None:
            object.__setattr__(self, "span_set", frozenset(labeled_spans(self.btree)))

    @property
    def n(self) -> int:
        return self.btree.j


def hamming_augment(scores: SpanScores, gold: GoldAnnotation) -> SpanScores:
    if gold.n != scores.n:
        raise DimensionMismatch(f"gold tree has {gold.n} words, chart has {scores.n}")
    nlab = scores.num_labels
    data = scores.data.copy()
    iu, ju = np.triu_indices(scores.n + 1, k=1)
    data[iu, ju] += 1.0
    for i, j, lab in gold.span_set:
        if not 0 <= lab < nlab:
            raise DimensionMismatch(f"gold label {lab} outside the chart's {nlab} labels")
        data[i, j, lab] = scores.data[i, j, lab]
    return SpanScores(data)


def _decode(scores: SpanScores, mode: Mode, rules: Optional[RuleTensor]):
    if mode is Mode.Conventional:
        chart = cky_fast(scores)
        return chart.score, decode_tree(scores, chart)
    if rules is None:
        raise ValueError("rule-based mode needs a rule table")
    chart = rule_cky_fast(scores, rules)
    if not chart.parsable:
        raise NoDerivation("no rule-conforming tree for a training sentence")
    return chart.score, rule_decode_tree(scores, chart, rules)


def hinge_loss(scores: SpanScores, gold: GoldAnnotation, mode=Mode.Conventional,
               rules: Optional[RuleTensor] = None) -> tuple[float, BinaryTree]:
    """Return the hinge loss and the loss-augmented winner."""
    mode = Mode(mode)
    augmented = hamming_augment(scores, gold)
    best, tree = _decode(augmented, mode, rules)
    return max(0.0, best - tree_score(scores, gold.btree)), tree


def joint_loss(scores: SpanScores, gold: GoldAnnotation, rules: RuleTensor, lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    lc, _ = hinge_loss(scores, gold, Mode.Conventional)
    lr, _ = hinge_loss(scores, gold, Mode.RuleBased, rules)
    return (1.0 - lam) * lc + lam * lr


def _indicator(tree: BinaryTree, weight: float, out: np.ndarray):
    for node in tree.nodes():
        out[node.i, node.j, node.label_id] += weight


def loss_and_grad(model: ScorerModel, words: Sequence[str], gold: GoldAnnotation,
                  rules: RuleTensor, lam: float):
    """Losses ``(L_c, L_r, L*)`` and parameter subgradients of ``L*`` for one sentence."""
    enc = encode(model, words)
    scores, cache = score_spans(model, enc, return_cache=True)
    dscores = np.zeros_like(scores.data)
    losses = []
    for mode, weight in ((Mode.Conventional, 1.0 - lam), (Mode.RuleBased, lam)):
        loss, winner = hinge_loss(scores, gold, mode, rules)
        losses.append(loss)
        if loss > 0 and weight > 0:
            _indicator(winner, weight, dscores)
            _indicator(gold.btree, -weight, dscores)
    lc, lr = losses
    grads = backward(model, enc, cache, dscores)
    return lc, lr, (1.0 - lam) * lc + lam * lr, grads


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_lc: float
    mean_lr: float
    mean_joint: float


def train(model: ScorerModel, corpus: Sequence[tuple[Sequence[str], GoldAnnotation]],
          rules: RuleTensor, cfg: TrainConfig,
          on_epoch: Optional[Callable[[EpochStats, ScorerModel], object]] = None) -> ScorerModel:
    """Minibatch subgradient descent on the joint loss.

    Each update uses the mean subgradient of a batch, accumulated in
    corpus-index order.  ``on_epoch`` is called after every epoch; returning
    ``False`` from it stops training.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    rng = np.random.default_rng(cfg.seed)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(corpus))
        totals = np.zeros(3)
        for start in range(0, len(order), cfg.batch_size):
            batch = sorted(order[start:start + cfg.batch_size])
            acc = None
            for idx in batch:
                words, gold = corpus[idx]
                lc, lr, lj, grads = loss_and_grad(model, words, gold, rules, cfg.lam)
                totals += (lc, lr, lj)
                if acc is None:
                    acc = grads
                else:
                    for k in acc:
                        acc[k] += grads[k]
            model = model.updated({k: g / len(batch) for k, g in acc.items()}, cfg.learning_rate)
        stats = EpochStats(epoch, *(float(x) for x in totals / len(corpus)))
        if on_epoch is not None and on_epoch(stats, model) is False:
            break
    return model
