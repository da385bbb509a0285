"""Bracketed constituency trees, left-branching binarization and label vocabularies.

Two tree types live here.  :class:`Tree` is the n-ary treebank tree whose
leaves are preterminals carrying a word.  :class:`BinaryTree` is the strictly
binary form consumed by the decoders: part-of-speech tags are collapsed to
``@`` and the nodes introduced by binarization are labelled ``$`` (or ``$``
followed by the label of their left child).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .errors import (
    EmptyNode,
    EmptySentence,
    LeafWithoutWord,
    LengthMismatch,
    TreeFormatError,
    UnbalancedParens,
    UnknownLabel,
)

POS_LABEL = "@"
GEN_LABEL = "$"
CHAIN_SEP = "::"
TRACE_TAG = "-NONE-"


class LabelingScheme(enum.Enum):
    DollarOnly = "dollar"
    DollarPlusLeftChild = "dollar-left"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name):
                return member
        raise ValueError(f"unknown labeling scheme {value!r}")


def is_generated(label: str) -> bool:
    return label.startswith(GEN_LABEL)


@dataclass(frozen=True)
class Tree:
    label: str
    children: tuple = ()
    word: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))
        if (self.word is None) == (len(self.children) == 0):
            raise ValueError("a node has a word iff it has no children")

    @classmethod
    def leaf(cls, label, word):
        return cls(label, (), word)

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    def leaves(self) -> Iterator["Tree"]:
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.extend(reversed(node.children))

    def words(self) -> list[str]:
        return [leaf.word for leaf in self.leaves()]

    def pos(self) -> list[str]:
        return [leaf.label for leaf in self.leaves()]

    def __len__(self):
        return sum(1 for _ in self.leaves())

    def __str__(self):
        return serialize_bracketed(self)


@dataclass(frozen=True)
class BinaryTree:
    label_id: int
    span: tuple
    left: Optional["BinaryTree"] = None
    right: Optional["BinaryTree"] = None
    word: Optional[str] = field(default=None, compare=False)

    @property
    def i(self) -> int:
        return self.span[0]

    @property
    def j(self) -> int:
        return self.span[1]

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def nodes(self) -> Iterator["BinaryTree"]:
        """Pre-order traversal without recursion."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def productions(self) -> Iterator[tuple[int, int, int]]:
        for node in self.nodes():
            if not node.is_leaf:
                yield node.label_id, node.left.label_id, node.right.label_id

    def to_string(self, vocab: "LabelVocab") -> str:
        if self.is_leaf:
            return f"({vocab.label(self.label_id)} {self.word if self.word is not None else self.i})"
        return "({} {} {})".format(
            vocab.label(self.label_id),
            self.left.to_string(vocab),
            self.right.to_string(vocab),
        )


class LabelVocab:
    """Dense label <-> id map.  Ids are line numbers of the vocab file."""

    def __init__(self, labels: Iterable[str]):
        self.labels = tuple(labels)
        self.index = {label: idx for idx, label in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValueError("duplicate labels in vocabulary")
        if POS_LABEL not in self.index:
            raise ValueError(f"vocabulary must contain {POS_LABEL!r}")

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self.index

    def __eq__(self, other):
        return isinstance(other, LabelVocab) and self.labels == other.labels

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        return f"LabelVocab({list(self.labels)!r})"

    @property
    def pad_id(self) -> int:
        """Sentinel id one past the last real label; never emitted in trees."""
        return len(self.labels)

    def id(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise UnknownLabel(label) from None

    def label(self, label_id: int) -> str:
        return self.labels[label_id]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for label in self.labels:
                f.write(label + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls(line.rstrip("\n") for line in f if line.strip())


# ---------------------------------------------------------------------------
# bracketed I/O

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def parse_bracketed(text: str) -> list[Tree]:
    """Read every top-level S-expression in ``text``.

    Leaves are ``(POS word)``.  A label-less outer wrapper ``( ... )`` around a
    single tree is removed.
    """
    trees = []
    # frame: [label, children, words, offset]
    stack: list[list] = []
    for m in _TOKEN_RE.finditer(text):
        tok, pos = m.group(), m.start()
        if tok == "(":
            if stack and stack[-1][0] is None:
                stack[-1][0] = ""
            stack.append([None, [], [], pos])
        elif tok == ")":
            if not stack:
                raise UnbalancedParens("unexpected ')'", pos)
            label, children, words, start = stack.pop()
            node = _close_node(label or "", children, words, start)
            if stack:
                stack[-1][1].append(node)
            else:
                trees.append(node)
        else:
            if not stack:
                raise TreeFormatError(f"bare token {tok!r} outside brackets", pos)
            frame = stack[-1]
            if frame[0] is None:
                frame[0] = tok
            else:
                frame[2].append(tok)
    if stack:
        raise UnbalancedParens("unclosed '('", stack[-1][3])
    return trees


def _close_node(label, children, words, start):
    if children and words:
        raise TreeFormatError("node mixes words and subtrees", start)
    if words:
        if len(words) > 1:
            raise TreeFormatError("leaf has more than one word", start)
        if not label:
            raise LeafWithoutWord("unlabelled leaf", start)
        return Tree.leaf(label, words[0])
    if not children:
        if label:
            raise LeafWithoutWord(f"leaf {label!r} has no word", start)
        raise EmptyNode("empty node", start)
    if not label:
        if len(children) != 1:
            raise EmptyNode("unlabelled node with several children", start)
        return children[0]
    return Tree(label, tuple(children))


def serialize_bracketed(tree: Tree) -> str:
    if tree.is_leaf:
        return f"({tree.label} {tree.word})"
    return "({} {})".format(tree.label, " ".join(serialize_bracketed(c) for c in tree.children))


def load_trees(path) -> list[Tree]:
    with open(path, encoding="utf-8") as f:
        return parse_bracketed(f.read())


def write_trees(path, trees: Iterable[Tree]):
    with open(path, "w", encoding="utf-8") as f:
        for tree in trees:
            f.write(serialize_bracketed(tree) + "\n")


# ---------------------------------------------------------------------------
# preprocessing


def _strip_function_tags(label: str) -> str:
    for k, ch in enumerate(label):
        if k > 0 and ch in "-=":
            return label[:k]
    return label


def clean_tree(tree: Tree) -> Optional[Tree]:
    """Drop trace subtrees and functional tags, EVALB style.

    Returns None when nothing but empty elements remains.
    """
    if tree.is_leaf:
        return None if tree.label == TRACE_TAG else tree
    children = tuple(c for c in (clean_tree(c) for c in tree.children) if c is not None)
    if not children:
        return None
    return Tree(_strip_function_tags(tree.label), children)


def collapse_unary_chains(tree: Tree) -> Tree:
    if tree.is_leaf:
        return tree
    labels = [tree.label]
    node = tree
    while len(node.children) == 1 and not node.children[0].is_leaf:
        node = node.children[0]
        labels.append(node.label)
    return Tree(CHAIN_SEP.join(labels), tuple(collapse_unary_chains(c) for c in node.children))


def expand_unary_chains(tree: Tree) -> Tree:
    if tree.is_leaf:
        return tree
    children = tuple(expand_unary_chains(c) for c in tree.children)
    parts = tree.label.split(CHAIN_SEP)
    node = Tree(parts[-1], children)
    for label in reversed(parts[:-1]):
        node = Tree(label, (node,))
    return node


def prepare_tree(tree: Tree) -> Optional[Tree]:
    """Cleaning followed by unary collapse; the form binarization expects."""
    cleaned = clean_tree(tree)
    return None if cleaned is None else collapse_unary_chains(cleaned)


# ---------------------------------------------------------------------------
# binarization


def _binarize_labels(tree: Tree, scheme: LabelingScheme):
    """String-labelled binarization: nested tuples (label, i, j, left, right, word)."""
    if len(tree) == 0:
        raise EmptySentence("tree has no leaves")
    counter = [0]

    def leaf(label, word):
        i = counter[0]
        counter[0] += 1
        return (label, i, i + 1, None, None, word)

    def join(label, left, right):
        return (label, left[1], right[2], left, right, None)

    def gen_label(left):
        if scheme is LabelingScheme.DollarOnly:
            return GEN_LABEL
        return GEN_LABEL + left[0]

    def convert(node):
        if node.is_leaf:
            return leaf(POS_LABEL, node.word)
        kids = node.children
        if len(kids) == 1:
            if not kids[0].is_leaf:
                raise ValueError(f"unary chain under {node.label!r}; collapse unary chains first")
            return leaf(node.label, kids[0].word)
        acc = convert(kids[0])
        for kid in kids[1:-1]:
            acc = join(gen_label(acc), acc, convert(kid))
        return join(node.label, acc, convert(kids[-1]))

    return convert(tree)


def _iter_labels(snode):
    stack = [snode]
    while stack:
        node = stack.pop()
        yield node[0]
        if node[3] is not None:
            stack.append(node[3])
            stack.append(node[4])


def build_vocab(trees: Iterable[Tree], scheme=LabelingScheme.DollarOnly) -> LabelVocab:
    """Label vocabulary of a prepared (unary-collapsed) corpus.

    ``@`` always gets id 0 and, under the dollar-only scheme, ``$`` gets id 1;
    the remaining labels follow in sorted order.
    """
    scheme = LabelingScheme.parse(scheme)
    seen = set()
    for tree in trees:
        seen.update(_iter_labels(_binarize_labels(tree, scheme)))
    head = [POS_LABEL]
    if scheme is LabelingScheme.DollarOnly:
        head.append(GEN_LABEL)
    return LabelVocab(head + sorted(seen - set(head)))


def binarize_left(tree: Tree, scheme: LabelingScheme, vocab: LabelVocab) -> BinaryTree:
    scheme = LabelingScheme.parse(scheme)
    snode = _binarize_labels(tree, scheme)

    def to_binary(node):
        label, i, j, left, right, word = node
        if left is None:
            return BinaryTree(vocab.id(label), (i, j), word=word)
        return BinaryTree(vocab.id(label), (i, j), to_binary(left), to_binary(right))

    return to_binary(snode)


def debinarize(btree: BinaryTree, vocab: LabelVocab, original_pos: Sequence[str],
               words: Optional[Sequence[str]] = None) -> Tree:
    """Invert :func:`binarize_left`.

    Generated (``$``-prefixed) nodes are spliced into their parent, compound
    ``A::B`` labels become unary chains, and leaves get their POS tag back from
    ``original_pos``.  Words come from ``words`` if given, else from the leaves.
    """
    n = btree.j
    if len(original_pos) != n:
        raise LengthMismatch(f"{len(original_pos)} POS tags for a {n}-word tree")
    if words is not None and len(words) != n:
        raise LengthMismatch(f"{len(words)} words for a {n}-word tree")

    def chain(label, inner_children):
        parts = label.split(CHAIN_SEP)
        node = Tree(parts[-1], inner_children)
        for part in reversed(parts[:-1]):
            node = Tree(part, (node,))
        return node

    def expand(node):
        label = vocab.label(node.label_id)
        if node.is_leaf:
            word = words[node.i] if words is not None else node.word
            if word is None:
                raise LengthMismatch(f"no word for position {node.i}")
            pre = Tree.leaf(original_pos[node.i], word)
            if label == POS_LABEL or is_generated(label):
                return [pre]
            return [chain(label, (pre,))]
        children = expand(node.left) + expand(node.right)
        if label == POS_LABEL or is_generated(label):
            return children
        return [chain(label, tuple(children))]

    out = expand(btree)
    if len(out) == 1:
        return out[0]
    return Tree(vocab.label(btree.label_id), tuple(out))


def labeled_spans(btree: BinaryTree) -> set[tuple[int, int, int]]:
    return {(node.i, node.j, node.label_id) for node in btree.nodes()}


def binary_from_string(text: str, vocab: LabelVocab) -> BinaryTree:
    """Build a BinaryTree from ``(X (A w) (B w))`` notation with string labels."""
    (tree,) = parse_bracketed(text)
    counter = [0]

    def convert(node):
        if node.is_leaf:
            i = counter[0]
            counter[0] += 1
            return BinaryTree(vocab.id(node.label), (i, i + 1), word=node.word)
        if len(node.children) != 2:
            raise ValueError("binary tree nodes need exactly two children")
        left = convert(node.children[0])
        right = convert(node.children[1])
        return BinaryTree(vocab.id(node.label), (left.i, right.j), left, right)

    return convert(tree)
