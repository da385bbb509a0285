import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

# Seven-word sentence whose left-branching binarization yields exactly the six
# rules S -> $ VP, $ -> @ NP, NP -> @ @, VP -> @ VP, VP -> @ ADJP, ADJP -> @ @.
WEATHER = ("(S (RB Today) (NP (DT the) (NN weather)) "
           "(VP (VBZ is) (VP (VBG getting) (ADJP (RB very) (JJ cold)))))")

WEATHER_RULES = {
    ("S", "$", "VP"), ("$", "@", "NP"), ("NP", "@", "@"),
    ("VP", "@", "VP"), ("VP", "@", "ADJP"), ("ADJP", "@", "@"),
}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def weather_tree():
    from rulecky.treebank import parse_bracketed

    return parse_bracketed(WEATHER)[0]


def random_binary_tree(rng, n, nlab, start=0):
    """Uniformly random split points, random labels; leaves over [start, start+n)."""
    from rulecky.treebank import BinaryTree

    def build(i, j):
        lab = int(rng.integers(nlab))
        if j - i == 1:
            return BinaryTree(lab, (i, j))
        k = int(rng.integers(i + 1, j))
        return BinaryTree(lab, (i, j), build(i, k), build(k, j))

    return build(start, start + n)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
