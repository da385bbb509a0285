"""Acceptance gate: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import functools
import itertools
import time

import numpy as np
import pytest

import oracles
from conftest import WEATHER, WEATHER_RULES, random_binary_tree
from rulecky.chart import SpanScores, cky_fast, cky_sequential
from rulecky.evaluation import evaluate
from rulecky.grammar import RuleSet, build_rule_tensor, extract_rules, rule_coverage
from rulecky.pipeline import Parser, prepare_corpus
from rulecky.rule_decoder import rule_cky_fast, rule_cky_sequential, rule_decode_tree
from rulecky.scorer import ScorerModel
from rulecky.toy import toy_treebank
from rulecky.trainer import GoldAnnotation, Mode, TrainConfig, hinge_loss, joint_loss, loss_and_grad, train
from rulecky.treebank import (
    LabelingScheme,
    LabelVocab,
    binarize_left,
    build_vocab,
    collapse_unary_chains,
    debinarize,
    parse_bracketed,
)
from test_rule_decoder import random_instance
from test_treebank import random_tree

RESULTS: dict[int, str] = {}


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def vocab_of(nlab):
    return LabelVocab(["@"] + [f"L{k}" for k in range(1, nlab)])


def test_criterion_01_unconstrained_optimality():
    rng = np.random.default_rng(101)
    start, worst = time.perf_counter(), 0.0
    for k in range(200):
        n, nlab = int(rng.integers(1, 9)), int(rng.integers(1, 7))
        scores = SpanScores.random(n, nlab, rng)
        data = scores.data.tolist()
        # full label enumeration where it is affordable, per-node label max otherwise
        if (2 * n - 1) * np.log(nlab) <= np.log(4000):
            best = oracles.best_unconstrained_exhaustive(data, n, nlab)
        else:
            best = oracles.best_unconstrained(data, n)
        worst = max(worst, abs(cky_sequential(scores).t[0, n] - best))
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-9 and elapsed < 60, f"200 charts, max |diff|={worst:.1e}, {elapsed:.1f}s")


@functools.cache
def _rule_optimality_run():
    """Returns (max |diff|, disagreements, unparsable, seconds, decoded trees with their rules)."""
    rng = np.random.default_rng(202)
    decoded = []
    start, worst, disagreements, unparsable = time.perf_counter(), 0.0, 0, 0
    for k in range(200):
        n, nlab = int(rng.integers(1, 8)), int(rng.integers(1, 6))
        scores = SpanScores.random(n, nlab, rng)
        rules = RuleSet({tuple(int(x) for x in rng.integers(0, nlab, 3)): 1
                         for _ in range(int(rng.integers(1, 13)))})
        chart = rule_cky_sequential(scores, rules)
        best = oracles.best_with_rules(scores.data.tolist(), n, nlab, rules)
        if best == float("-inf") or not chart.parsable:
            unparsable += 1
            disagreements += best != float("-inf") or chart.parsable
            continue
        worst = max(worst, abs(chart.score - best))
        tensor = build_rule_tensor(rules, vocab_of(nlab))
        decoded.append((rule_decode_tree(scores, chart, tensor), rules))
    return worst, disagreements, unparsable, time.perf_counter() - start, decoded


def test_criterion_02_rule_constrained_optimality():
    worst, disagreements, unparsable, elapsed, _ = _rule_optimality_run()
    ok = worst <= 1e-9 and disagreements == 0 and elapsed < 120
    report(2, ok, f"200 instances ({unparsable} without derivation), max |diff|={worst:.1e}, "
                  f"NoDerivation disagreements={disagreements}, {elapsed:.1f}s")


@functools.cache
def _bit_equality_run():
    rng = np.random.default_rng(303)
    decoded = []
    plain_bad = rule_bad = 0
    for k in range(100):
        n, nlab = int(rng.integers(1, 41)), int(rng.integers(1, 9))
        scores = SpanScores.random(n, nlab, rng)
        plain_bad += not cky_sequential(scores).same_tables(cky_fast(scores))
    for k in range(100):
        scores, rules = random_instance(rng, 30, 8, 30, integer=k % 4 == 0)
        tensor = build_rule_tensor(rules, vocab_of(scores.num_labels))
        seq, fast = rule_cky_sequential(scores, rules), rule_cky_fast(scores, tensor)
        rule_bad += not seq.same_tables(fast)
        if fast.parsable:
            decoded.append((rule_decode_tree(scores, fast, tensor), rules))
    return plain_bad, rule_bad, decoded


def test_criterion_03_sequential_fast_bit_equality():
    plain_bad, rule_bad, _ = _bit_equality_run()
    report(3, plain_bad == rule_bad == 0,
           f"unconstrained mismatches={plain_bad}/100, rule-based mismatches={rule_bad}/100")


@pytest.fixture(scope="module")
def toy_run():
    train_trees, test_trees = toy_treebank(2000, seed=1), toy_treebank(200, seed=2)
    corpus = prepare_corpus(train_trees)
    tensor = build_rule_tensor(corpus.rules(), corpus.vocab)
    cfg = TrainConfig(lam=0.4, learning_rate=0.01, epochs=5, batch_size=16, seed=777)
    runs = []
    for _ in range(2):
        start = time.perf_counter()
        model = train(ScorerModel.init(len(corpus.vocab), seed=cfg.seed), corpus.gold(), tensor, cfg)
        parser = Parser(model, corpus.vocab, tensor)
        result, _ = parser.evaluate(test_trees)
        parses = [parser.parse_binary(t.words()) for t in test_trees]
        runs.append((result, model, parses, time.perf_counter() - start))
    return corpus, runs


def test_criterion_04_constraint_satisfaction(toy_run):
    corpus, runs = toy_run
    # fallback trees are unconstrained by design; they are excluded and counted
    rules = corpus.rules()
    toy_trees = [(tree, rules) for tree, info in runs[0][2] if not info.fallback]
    fallbacks = len(runs[0][2]) - len(toy_trees)
    earlier = _rule_optimality_run()[4] + _bit_equality_run()[2]
    checked = earlier + toy_trees
    total = bad = 0
    for tree, rules in checked:
        for prod in tree.productions():
            total += 1
            bad += prod not in rules
    ok = bad == 0 and len(earlier) > 0 and len(toy_trees) > 0
    report(4, ok, f"{len(checked)} decoded trees, {total} productions, {bad} outside R "
                  f"({fallbacks} toy fallbacks excluded)")


def test_criterion_05_weather_rules():
    tree = collapse_unary_chains(parse_bracketed(WEATHER)[0])
    found = {}
    for scheme in LabelingScheme:
        vocab = build_vocab([tree], scheme)
        rules = extract_rules([binarize_left(tree, scheme, vocab)])
        found[scheme] = set(rules.to_strings(vocab))
    left_expected = {("$@", "@", "NP") if r == ("$", "@", "NP") else
                     ("S", "$@", "VP") if r == ("S", "$", "VP") else r for r in WEATHER_RULES}
    ok = (found[LabelingScheme.DollarOnly] == WEATHER_RULES
          and found[LabelingScheme.DollarPlusLeftChild] == left_expected)
    report(5, ok, f"dollar: {len(found[LabelingScheme.DollarOnly])} rules, "
                  f"dollar-left contains $@ -> @ NP: {('$@', '@', 'NP') in found[LabelingScheme.DollarPlusLeftChild]}")


def test_criterion_06_dominance():
    rng = np.random.default_rng(606)
    violations = complete_bad = 0
    for k in range(100):
        scores, rules = random_instance(rng, 10, 5, 15)
        nlab = scores.num_labels
        plain = cky_fast(scores).score
        constrained = rule_cky_fast(scores, build_rule_tensor(rules, vocab_of(nlab))).score
        violations += constrained > plain
        full = RuleSet({r: 1 for r in itertools.product(range(nlab), repeat=3)})
        full_score = rule_cky_fast(scores, build_rule_tensor(full, vocab_of(nlab))).score
        complete_bad += abs(full_score - plain) > 1e-9
    report(6, violations == complete_bad == 0,
           f"100 instances, dominance violations={violations}, complete-R mismatches={complete_bad}")


def _small(seed):
    rng = np.random.default_rng(seed)
    n, nlab = 5, 4
    gold = GoldAnnotation(random_binary_tree(rng, n, nlab))
    rules = RuleSet({**{r: 1 for r in extract_rules([gold.btree])},
                     **{tuple(int(x) for x in rng.integers(0, nlab, 3)): 1 for _ in range(8)}})
    model = ScorerModel.init(nlab, d=6, h=8, vocab_hash_dim=32, seed=seed)
    words = [f"w{k}" for k in rng.integers(0, 50, n)]
    return model, words, gold, build_rule_tensor(rules, vocab_of(nlab))


def _winners(model, words, gold, tensor):
    from rulecky.scorer import encode, score_spans

    s = score_spans(model, encode(model, words))
    return [hinge_loss(s, gold, mode, tensor)[1] for mode in Mode]


def test_criterion_07_gradients():
    worst, checked, eps = 0.0, 0, 1e-5
    for seed in range(500):
        model, words, gold, tensor = _small(seed)
        if min(loss_and_grad(model, words, gold, tensor, 0.4)[:2]) <= 0:
            continue
        rng = np.random.default_rng(seed + 7)
        direction = {k: rng.normal(size=v.shape) for k, v in model.params().items()}
        plus, minus = model.updated(direction, -eps), model.updated(direction, eps)
        base = _winners(model, words, gold, tensor)
        if _winners(plus, words, gold, tensor) != base or _winners(minus, words, gold, tensor) != base:
            continue
        for lam, idx in ((0.0, 0), (1.0, 1), (0.4, 2)):
            grads = loss_and_grad(model, words, gold, tensor, lam)[3]
            analytic = sum(float((grads[k] * direction[k]).sum()) for k in grads)
            numeric = (loss_and_grad(plus, words, gold, tensor, lam)[idx]
                       - loss_and_grad(minus, words, gold, tensor, lam)[idx]) / (2 * eps)
            worst = max(worst, abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-12))
        checked += 1
        if checked == 20:
            break
    report(7, checked == 20 and worst < 1e-4,
           f"{checked} instances away from ties, L_c/L_r/L* max rel err={worst:.1e}")


def test_criterion_08_loss_endpoints():
    rng = np.random.default_rng(808)
    bad = 0
    for _ in range(50):
        n, nlab = int(rng.integers(1, 10)), int(rng.integers(1, 6))
        scores = SpanScores.random(n, nlab, rng)
        gold = GoldAnnotation(random_binary_tree(rng, n, nlab))
        rules = RuleSet({**{r: 1 for r in extract_rules([gold.btree])}, (0, 0, 0): 1})
        tensor = build_rule_tensor(rules, vocab_of(nlab))
        lc = hinge_loss(scores, gold, Mode.Conventional)[0]
        lr = hinge_loss(scores, gold, Mode.RuleBased, tensor)[0]
        bad += joint_loss(scores, gold, tensor, 0.0) != lc or joint_loss(scores, gold, tensor, 1.0) != lr
    report(8, bad == 0, f"50 instances, endpoint mismatches={bad}")


def test_criterion_09_toy_training(toy_run):
    corpus, runs = toy_run
    (r1, m1, _, t1), (r2, m2, _, t2) = runs
    ok = r1.F1 >= 90.0 and max(t1, t2) < 600 and r1 == r2 and m1.equals(m2)
    report(9, ok, f"rule-based test F1={r1.F1:.2f} / {r2.F1:.2f} (identical={r1 == r2}), "
                  f"5 epochs, {t1:.0f}s and {t2:.0f}s per run")


def test_criterion_10_roundtrip_and_metric():
    rng = np.random.default_rng(1010)
    failures = 0
    for _ in range(1000):
        tree = random_tree(rng)
        for scheme in LabelingScheme:
            prepared = collapse_unary_chains(tree)
            vocab = build_vocab([prepared], scheme)
            back = debinarize(binarize_left(prepared, scheme, vocab), vocab, tree.pos())
            failures += back != tree
    gold = toy_treebank(100, seed=9)
    self_f1 = evaluate(gold, gold).F1
    g = [parse_bracketed(t)[0] for t in ("(S (NP (D a) (N b)) (VP (V c) (NP (D d) (ADJP (J e)))))",
                                          "(S (NP (D a) (N b)) (VP (V c)))")]
    p = [parse_bracketed(t)[0] for t in ("(S (NP (D a) (N b)) (VP (V c) (XP (D d) (J e))))",
                                          "(S (X (NP (D a)) (N b)) (VP (V c)))")]
    hand = evaluate(g, p)
    ok = failures == 0 and self_f1 == 100.0 and hand.LR == hand.LP == hand.F1 == 62.5
    report(10, ok, f"roundtrip failures={failures}/2000, gold-vs-gold F1={self_f1:.2f}, "
                   f"hand case LR/LP/F1={hand.LR}/{hand.LP}/{hand.F1}")


def test_criterion_11_coverage():
    vocab = LabelVocab(["@", "A", "B", "C"])
    A, B, C = (vocab.id(x) for x in "ABC")
    stats = rule_coverage(RuleSet({(A, B, C): 1}), RuleSet({(A, B, C): 3, (A, B, B): 1}))
    corpus = prepare_corpus(toy_treebank(500, seed=3))
    self_stats = rule_coverage(corpus.rules(), corpus.rules())
    ok = (stats.raw_recall == 0.5 and stats.weighted_recall == 0.75
          and self_stats.raw_recall == self_stats.weighted_recall == 1.0)
    report(11, ok, f"example raw={stats.raw_recall} weighted={stats.weighted_recall}, "
                   f"train-vs-train {self_stats.raw_recall}/{self_stats.weighted_recall}")


def test_criterion_12_step_structure():
    rng = np.random.default_rng(1212)
    bad = 0
    for n in range(1, 41):
        scores = SpanScores.random(n, 4, rng)
        rules = RuleSet({(1, 0, 0): 1, (2, 1, 3): 1, (3, 0, 2): 1})
        plain = cky_fast(scores)
        ruled = rule_cky_fast(scores, build_rule_tensor(rules, vocab_of(4)))
        bad += plain.steps != n - 1 or ruled.steps != n - 1
    report(12, bad == 0, f"n=1..40, fast decoders with steps != n-1: {bad}")
