"""Span score charts and unconstrained CKY decoding.

Two decoders produce the same :class:`ChartResult`.  :func:`cky_sequential`
loops over spans one at a time.  :func:`cky_fast` processes all spans of one
size in a single gather/add/max step over a flattened ``n x n`` chart in which
span ``(i, j)`` lives at cell ``i * n + j - 1``.

Both evaluate every candidate as ``best_label_score + (t_left + t_right)`` and
break ties toward the smallest split and the smallest label id, so their
outputs are bit-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InconsistentChart, LabelOutOfVocab, NonFiniteScore
from .treebank import BinaryTree


class SpanScores:
    """Dense chart ``s[i, j, label]``; only cells with ``i < j`` are meaningful."""

    def __init__(self, data):
        data = np.array(data, dtype=np.float64)
        if data.ndim != 3 or data.shape[0] != data.shape[1] or data.shape[0] < 2:
            raise ValueError(f"expected an (n+1, n+1, L) array, got shape {data.shape}")
        if data.shape[2] < 1:
            raise ValueError("need at least one label")
        data.setflags(write=False)
        self.data = data

    @property
    def n(self) -> int:
        return self.data.shape[0] - 1

    @property
    def num_labels(self) -> int:
        return self.data.shape[2]

    def __getitem__(self, key):
        return self.data[key]

    def __eq__(self, other):
        return isinstance(other, SpanScores) and np.array_equal(self.data, other.data)

    def upper(self) -> np.ndarray:
        """Scores of all spans, shape (n(n+1)/2, L), ordered by (i, j)."""
        iu, ju = np.triu_indices(self.n + 1, k=1)
        return self.data[iu, ju]

    def flat(self) -> np.ndarray:
        """(n*n, L) view where row ``i*n + j - 1`` holds span (i, j)."""
        n = self.n
        return self.data[:-1, 1:, :].reshape(n * n, self.num_labels)

    def check_finite(self):
        if not np.isfinite(self.upper()).all():
            raise NonFiniteScore("span scores contain NaN or infinity")

    @classmethod
    def from_spans(cls, n, num_labels, spans: dict, fill=0.0):
        data = np.full((n + 1, n + 1, num_labels), fill, dtype=np.float64)
        for (i, j), row in spans.items():
            data[i, j] = row
        return cls(data)

    @classmethod
    def random(cls, n, num_labels, rng, scale=1.0):
        data = np.zeros((n + 1, n + 1, num_labels))
        iu, ju = np.triu_indices(n + 1, k=1)
        data[iu, ju] = rng.normal(scale=scale, size=(len(iu), num_labels))
        return cls(data)


@dataclass(frozen=True)
class ChartResult:
    """Sub-tree scores ``t[i, j]`` and split points ``K[i, j]``.

    ``steps`` counts bulk reduce steps (zero for the sequential decoder).
    """

    t: np.ndarray
    K: np.ndarray
    steps: int = 0

    @property
    def n(self) -> int:
        return self.t.shape[0] - 1

    @property
    def score(self) -> float:
        return float(self.t[0, self.n])

    def same_tables(self, other: "ChartResult") -> bool:
        return np.array_equal(self.t, other.t) and np.array_equal(self.K, other.K)


def cky_sequential(scores: SpanScores) -> ChartResult:
    scores.check_finite()
    n = scores.n
    best = scores.data.max(axis=-1)
    t = np.zeros((n + 1, n + 1))
    K = np.full((n + 1, n + 1), -1, dtype=np.int64)
    for i in range(n):
        t[i, i + 1] = best[i, i + 1]
    for ss in range(2, n + 1):
        for i in range(n - ss + 1):
            j = i + ss
            split, value = -1, 0.0
            for k in range(i + 1, j):
                cand = t[i, k] + t[k, j]
                if split < 0 or cand > value:
                    split, value = k, cand
            K[i, j] = split
            t[i, j] = best[i, j] + value
    return ChartResult(t, K)


def cky_fast(scores: SpanScores) -> ChartResult:
    scores.check_finite()
    n = scores.n
    best = scores.flat().max(axis=-1)
    t = np.zeros(n * n)
    K = np.full(n * n, -1, dtype=np.int64)
    diag = np.arange(n) * n + np.arange(n)
    t[diag] = best[diag]
    steps = 0
    for ss in range(2, n + 1):
        starts = np.arange(n - ss + 1)
        I = (starts * n + starts + ss - 1)[:, None]
        L = I + np.arange(1 - ss, 0)[None, :]
        R = I + np.arange(1, ss)[None, :] * n
        cand = t[L] + t[R]
        arg = cand.argmax(axis=-1)
        value = np.take_along_axis(cand, arg[:, None], axis=-1)[:, 0]
        I = I[:, 0]
        K[I] = starts + 1 + arg
        t[I] = best[I] + value
        steps += 1
    t2 = np.zeros((n + 1, n + 1))
    t2[:-1, 1:] = t.reshape(n, n)
    K2 = np.full((n + 1, n + 1), -1, dtype=np.int64)
    K2[:-1, 1:] = K.reshape(n, n)
    return ChartResult(t2, K2, steps)


def decode_tree(scores: SpanScores, chart: ChartResult,
                words: Optional[Sequence[str]] = None) -> BinaryTree:
    """Rebuild the best tree from split points; labels are per-span argmaxes."""
    n = scores.n
    labels = scores.data.argmax(axis=-1)
    order = []
    splits = {}
    stack = [(0, n)]
    while stack:
        i, j = stack.pop()
        order.append((i, j))
        if j - i > 1:
            k = int(chart.K[i, j])
            if not i < k < j:
                raise InconsistentChart(f"split {k} outside span ({i}, {j})")
            splits[i, j] = k
            stack.append((k, j))
            stack.append((i, k))
    return _assemble(order, splits, lambda i, j: int(labels[i, j]), words)


def _assemble(order, splits, label_of, words):
    built = {}
    for i, j in reversed(order):
        if j - i == 1:
            word = words[i] if words is not None else None
            built[i, j] = BinaryTree(label_of(i, j), (i, j), word=word)
        else:
            k = splits[i, j]
            built[i, j] = BinaryTree(label_of(i, j), (i, j), built[i, k], built[k, j])
    return built[order[0]]


def tree_score(scores: SpanScores, btree: BinaryTree) -> float:
    """Sum of span scores over every node, added in post-order.

    The post-order accumulation replays the decoders' association, so a
    decoded tree scores exactly ``t[0, n]``.
    """
    nlab = scores.num_labels
    if btree.j > scores.n or btree.i != 0:
        raise ValueError(f"tree span {btree.span} does not cover a {scores.n}-word chart")
    totals = {}
    order = list(btree.nodes())
    for node in reversed(order):
        if not 0 <= node.label_id < nlab:
            raise LabelOutOfVocab(f"label id {node.label_id} outside 0..{nlab - 1}")
        s = scores.data[node.i, node.j, node.label_id]
        if node.is_leaf:
            totals[node.span] = s
        else:
            totals[node.span] = s + (totals[node.left.span] + totals[node.right.span])
    return float(totals[btree.span])


# ---------------------------------------------------------------------------
# chart files

_MAGIC = b"RCKYSC01"


def save_scores(path, scores: SpanScores, binary=False):
    n, nlab = scores.n, scores.num_labels
    if binary:
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<II", n, nlab))
            f.write(scores.upper().astype("<f8").tobytes())
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{n}\t{nlab}\n")
        for i in range(n):
            for j in range(i + 1, n + 1):
                for lab in range(nlab):
                    f.write(f"{i}\t{j}\t{lab}\t{float(scores.data[i, j, lab])!r}\n")


def load_scores(path) -> SpanScores:
    with open(path, "rb") as f:
        head = f.read(len(_MAGIC))
        if head == _MAGIC:
            n, nlab = struct.unpack("<II", f.read(8))
            values = np.frombuffer(f.read(), dtype="<f8")
            count = n * (n + 1) // 2
            if values.size != count * nlab:
                raise ValueError(f"{path}: expected {count * nlab} scores, found {values.size}")
            data = np.zeros((n + 1, n + 1, nlab))
            iu, ju = np.triu_indices(n + 1, k=1)
            data[iu, ju] = values.reshape(count, nlab)
            return SpanScores(data)
    with open(path, encoding="utf-8") as f:
        n, nlab = (int(x) for x in f.readline().split())
        data = np.zeros((n + 1, n + 1, nlab))
        for line in f:
            if not line.strip():
                continue
            i, j, lab, value = line.split()
            i, j, lab = int(i), int(j), int(lab)
            if not (0 <= i < j <= n and 0 <= lab < nlab):
                raise ValueError(f"{path}: cell ({i}, {j}, {lab}) out of range")
            data[i, j, lab] = float(value)
    return SpanScores(data)
