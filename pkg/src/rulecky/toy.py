"""A small fixed PCFG for generating synthetic treebanks.

Eight phrasal categories, disjoint word lists per POS tag.  Samples are drawn
top-down and rejected until the sentence length falls in the requested range.
"""

from __future__ import annotations

import numpy as np

from .treebank import Tree

PHRASES = {
    "S": [(0.80, ("NP", "VP")), (0.10, ("ADVP", "NP", "VP")), (0.10, ("PP", "NP", "VP"))],
    "NP": [(0.45, ("DT", "NN")), (0.15, ("DT", "JJ", "NN")), (0.15, ("PRP",)),
           (0.15, ("NNS",)), (0.10, ("DT", "QP", "NNS"))],
    "VP": [(0.30, ("VBZ", "NP")), (0.10, ("VBZ",)), (0.15, ("VBZ", "NP", "PP")),
           (0.10, ("VBZ", "ADJP")), (0.10, ("MD", "VP")), (0.10, ("VBD", "SBAR")),
           (0.15, ("VBZ", "PP"))],
    "PP": [(1.0, ("IN", "NP"))],
    "ADJP": [(0.5, ("RB", "JJ")), (0.5, ("JJ",))],
    "ADVP": [(1.0, ("RB",))],
    "SBAR": [(1.0, ("CS", "S"))],
    "QP": [(0.6, ("CD",)), (0.4, ("RB", "CD"))],
}

WORDS = {
    "DT": ["the", "a", "this", "every", "some"],
    "NN": ["dog", "cat", "park", "idea", "river", "teacher", "house", "song"],
    "NNS": ["dogs", "cats", "ideas", "songs", "trees", "people"],
    "JJ": ["big", "old", "green", "happy", "quiet", "strange"],
    "PRP": ["she", "he", "they", "it", "we"],
    "VBZ": ["sees", "likes", "eats", "finds", "runs", "seems"],
    "VBD": ["said", "thought", "knew", "hoped"],
    "MD": ["can", "will", "must", "should"],
    "IN": ["in", "on", "with", "near", "under"],
    "RB": ["very", "quite", "often", "today", "almost"],
    "CS": ["that", "because", "if"],
    "CD": ["two", "three", "ten", "many"],
}


def sample_tree(rng: np.random.Generator, label="S", depth=0, max_depth=12) -> Tree:
    if label in WORDS:
        words = WORDS[label]
        return Tree.leaf(label, words[rng.integers(len(words))])
    options = PHRASES[label]
    probs = np.array([p for p, _ in options])
    if depth >= max_depth:
        # prefer the shortest expansion once the tree gets deep
        choice = min(range(len(options)), key=lambda k: len(options[k][1]))
    else:
        choice = rng.choice(len(options), p=probs / probs.sum())
    rhs = options[choice][1]
    return Tree(label, tuple(sample_tree(rng, sym, depth + 1, max_depth) for sym in rhs))


def toy_treebank(size: int, seed: int = 0, min_len: int = 3, max_len: int = 12) -> list[Tree]:
    rng = np.random.default_rng(seed)
    trees = []
    while len(trees) < size:
        tree = sample_tree(rng)
        if min_len <= len(tree) <= max_len:
            trees.append(tree)
    return trees
