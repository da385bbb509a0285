import itertools

import numpy as np
import pytest

import oracles
from rulecky.chart import SpanScores, cky_fast, cky_sequential, decode_tree, tree_score
from rulecky.errors import EmptyRuleSet, NoDerivation
from rulecky.grammar import RuleSet, build_rule_tensor
from rulecky.rule_decoder import (
    NEG,
    parse_with_rules,
    rule_cky_fast,
    rule_cky_sequential,
    rule_decode_tree,
)
from rulecky.treebank import LabelVocab


def vocab_of(nlab):
    return LabelVocab(["@"] + [f"L{k}" for k in range(1, nlab)])


def random_instance(rng, max_n, max_lab, max_rules, integer=False):
    n = int(rng.integers(1, max_n + 1))
    nlab = int(rng.integers(1, max_lab + 1))
    if integer:
        data = np.zeros((n + 1, n + 1, nlab))
        iu, ju = np.triu_indices(n + 1, k=1)
        data[iu, ju] = rng.integers(-2, 3, size=(len(iu), nlab))
        scores = SpanScores(data)
    else:
        scores = SpanScores.random(n, nlab, rng)
    count = int(rng.integers(1, max_rules + 1))
    rules = RuleSet({tuple(int(x) for x in rng.integers(0, nlab, 3)): 1 for _ in range(count)})
    return scores, rules


def test_single_rule_two_words():
    X = 1
    s = SpanScores.random(2, 3, np.random.default_rng(0))
    rules = RuleSet({(X, 0, 0): 1})
    for chart in (rule_cky_sequential(s, rules), rule_cky_fast(s, build_rule_tensor(rules, vocab_of(3)))):
        assert chart.t[0, 2, X] == s[0, 2, X] + (s[0, 1, 0] + s[1, 2, 0])
        assert chart.t[0, 2, 0] == NEG and chart.t[0, 2, 2] == NEG
        assert np.array_equal(chart.t[0, 1], s[0, 1])


def pp_attachment():
    """Unconstrained decoding prefers PP -> PP NP; the rules only allow PP -> IN NP."""
    vocab = LabelVocab(["@", "IN", "NP", "PP"])
    AT, IN, NP, PP = range(4)
    spans = {
        (0, 1): [0.0, 2.0, 0.0, 3.0],
        (1, 2): [1.0, 0.0, 0.0, 0.0],
        (2, 3): [1.0, 0.0, 0.0, 0.0],
        (1, 3): [0.0, 0.0, 2.0, 0.0],
        (0, 2): [0.0, 0.0, 0.0, 0.0],
        (0, 3): [0.0, 0.0, 0.0, 2.0],
    }
    scores = SpanScores.from_spans(3, 4, spans)
    rules = RuleSet({(PP, IN, NP): 1, (NP, AT, AT): 1})
    return scores, rules, vocab


def test_pp_attachment_rule_decoder_avoids_nonconforming_tree():
    scores, rules, vocab = pp_attachment()
    plain = cky_fast(scores)
    wrong = decode_tree(scores, plain)
    assert wrong.to_string(vocab) == "(PP (PP 0) (NP (@ 1) (@ 2)))"
    assert (vocab.id("PP"), vocab.id("PP"), vocab.id("NP")) not in rules
    tensor = build_rule_tensor(rules, vocab)
    chart = rule_cky_fast(scores, tensor)
    assert chart.same_tables(rule_cky_sequential(scores, rules))
    right = rule_decode_tree(scores, chart, tensor)
    assert right.to_string(vocab) == "(PP (IN 0) (NP (@ 1) (@ 2)))"
    assert tree_score(scores, wrong) == 9.0 > tree_score(scores, right) == chart.score == 8.0


def test_matches_brute_force():
    rng = np.random.default_rng(77)
    for _ in range(200):
        scores, rules = random_instance(rng, 7, 5, 12)
        n, nlab = scores.n, scores.num_labels
        expected = oracles.best_with_rules(scores.data.tolist(), n, nlab, rules)
        chart = rule_cky_sequential(scores, rules)
        if expected == float("-inf"):
            assert not chart.parsable
        else:
            assert chart.parsable
            assert abs(chart.score - expected) <= 1e-9


def test_oracle_self_check_full_label_enumeration():
    rng = np.random.default_rng(8)
    for _ in range(40):
        scores, rules = random_instance(rng, 4, 3, 6)
        data = scores.data.tolist()
        a = oracles.best_with_rules(data, scores.n, scores.num_labels, rules)
        b = oracles.best_with_rules_exhaustive(data, scores.n, scores.num_labels, rules)
        assert a == pytest.approx(b, abs=1e-12) or a == b == float("-inf")


def test_fast_bit_identical():
    rng = np.random.default_rng(31)
    for seed in range(100):
        scores, rules = random_instance(rng, 30, 12, 40, integer=seed % 4 == 0)
        tensor = build_rule_tensor(rules, vocab_of(scores.num_labels))
        a = rule_cky_sequential(scores, rules)
        b = rule_cky_fast(scores, tensor)
        assert a.same_tables(b)


def test_step_structure():
    rng = np.random.default_rng(1)
    scores = SpanScores.random(30, 6, rng)
    rules = RuleSet({(1, 0, 0): 1, (2, 1, 0): 1})
    chart = rule_cky_fast(scores, build_rule_tensor(rules, vocab_of(6)))
    assert chart.steps == 29
    assert chart.reductions == 2 * 29


def test_decoded_trees_conform():
    rng = np.random.default_rng(5)
    solved = 0
    for _ in range(150):
        scores, rules = random_instance(rng, 9, 5, 12)
        tensor = build_rule_tensor(rules, vocab_of(scores.num_labels))
        chart = rule_cky_fast(scores, tensor)
        if not chart.parsable:
            with pytest.raises(NoDerivation):
                rule_decode_tree(scores, chart, tensor)
            continue
        solved += 1
        tree = rule_decode_tree(scores, chart, tensor)
        assert all(p in rules for p in tree.productions())
        assert tree_score(scores, tree) == chart.score
        assert len(list(tree.nodes())) == 2 * scores.n - 1
    assert solved > 50


def test_single_word_root_is_raw_argmax():
    s = SpanScores.from_spans(1, 3, {(0, 1): [0.5, -1.0, 2.0]})
    rules = RuleSet({(1, 0, 0): 1})
    tensor = build_rule_tensor(rules, vocab_of(3))
    tree = rule_decode_tree(s, rule_cky_fast(s, tensor), tensor)
    assert tree.is_leaf and tree.label_id == 2


def test_dominance_and_complete_rules():
    rng = np.random.default_rng(11)
    for k in range(100):
        scores, rules = random_instance(rng, 10, 5, 15)
        n, nlab = scores.n, scores.num_labels
        plain = cky_sequential(scores).t[0, n]
        chart = rule_cky_fast(scores, build_rule_tensor(rules, vocab_of(nlab)))
        assert chart.score <= plain
        if k % 5 == 0:
            full = RuleSet({r: 1 for r in itertools.product(range(nlab), repeat=3)})
            full_chart = rule_cky_fast(scores, build_rule_tensor(full, vocab_of(nlab)))
            assert full_chart.score == pytest.approx(plain, abs=1e-9)


def test_no_derivation_agrees_with_oracle():
    # only X -> @ @ : a three-word sentence cannot be parsed
    s = SpanScores.random(3, 2, np.random.default_rng(0))
    rules = RuleSet({(1, 0, 0): 1})
    tensor = build_rule_tensor(rules, vocab_of(2))
    chart = rule_cky_fast(s, tensor)
    assert not chart.parsable
    assert oracles.best_with_rules(s.data.tolist(), 3, 2, rules) == float("-inf")
    with pytest.raises(NoDerivation):
        parse_with_rules(s, tensor, fallback=False)
    tree, info = parse_with_rules(s, tensor, fallback=True)
    assert info.fallback and tree == decode_tree(s, cky_fast(s))


def test_empty_rules_rejected():
    s = SpanScores.random(2, 2, np.random.default_rng(0))
    with pytest.raises(EmptyRuleSet):
        rule_cky_sequential(s, RuleSet())
