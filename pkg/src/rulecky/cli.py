"""Command-line entry point: ``rulecky <command> ...`` or ``python -m rulecky``."""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .chart import SpanScores, cky_fast, cky_sequential
from .errors import RuleckyError
from .evaluation import evaluate
from .grammar import RuleSet, build_rule_tensor, rule_coverage
from .pipeline import Parser, extend_vocab, prepare_corpus
from .rule_decoder import rule_cky_fast, rule_cky_sequential
from .scorer import DEFAULT_SEED, ScorerModel
from .trainer import TrainConfig, train
from .treebank import LabelVocab, load_trees, parse_bracketed, prepare_tree, serialize_bracketed

SEED_ENV = "RULECKY_SEED"


class CliError(Exception):
    pass


def _default_seed():
    return int(os.environ.get(SEED_ENV, DEFAULT_SEED))


def _lambda(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"lambda must lie in [0, 1], got {value}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text):
    try:
        values = [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("lengths must be positive")
    return values


def _load_nonempty_trees(path):
    trees = load_trees(path)
    if not trees:
        raise CliError(f"{path}: no trees found")
    return trees


# ---------------------------------------------------------------------------


def cmd_extract(args):
    corpus = prepare_corpus(_load_nonempty_trees(args.input), args.scheme)
    rules = corpus.rules()
    corpus.vocab.save(args.out_vocab)
    rules.save(args.out_rules, corpus.vocab)
    rmax = build_rule_tensor(rules, corpus.vocab).rmax if len(rules) else 0
    print(f"rules={len(rules)}\trmax={rmax}\tlabels={len(corpus.vocab)}")


def _train_once(args, cfg, corpus, dev, rules, out_model, log):
    model = ScorerModel.init(len(corpus.vocab), d=args.dim, h=args.hidden, seed=cfg.seed)
    best = {"f1": -1.0, "model": model}

    def on_epoch(stats, current):
        f1 = float("nan")
        if dev is not None:
            f1 = Parser(current, corpus.vocab, rules).evaluate(dev)[0].F1
        print(f"{stats.epoch}\t{stats.mean_lc:.4f}\t{stats.mean_lr:.4f}\t{stats.mean_joint:.4f}\t{f1:.2f}",
              file=log, flush=True)
        if dev is None or f1 > best["f1"]:
            best.update(f1=f1, model=current)

    train(model, corpus.gold(), rules, cfg, on_epoch=on_epoch)
    best["model"].save(out_model)
    corpus.vocab.save(out_model + ".vocab")
    return best["f1"]


def cmd_train(args):
    seed = args.seed if args.seed is not None else _default_seed()
    overrides = dict(lam=args.lam, learning_rate=args.lr, epochs=args.epochs, seed=seed)
    try:
        cfg = TrainConfig.load(args.config, **overrides) if args.config else TrainConfig(
            **{k: v for k, v in overrides.items() if v is not None})
    except ValueError as e:
        raise CliError(str(e)) from None
    vocab = LabelVocab.load(args.vocab) if args.vocab else None
    corpus = prepare_corpus(_load_nonempty_trees(args.train), args.scheme, vocab)
    ruleset = RuleSet.load(args.rules, corpus.vocab) if args.rules else corpus.rules()
    rules = build_rule_tensor(ruleset, corpus.vocab)
    dev = _load_nonempty_trees(args.dev) if args.dev else None
    log = open(args.log, "w", encoding="utf-8") if args.log else sys.stdout
    try:
        if not args.lambda_sweep:
            print("epoch\tL_c\tL_r\tL*\tdev_F1", file=log)
            _train_once(args, cfg, corpus, dev, rules, args.out_model, log)
            return
        rows = []
        for k in range(11):
            lam = k / 10
            print(f"# lambda={lam:.1f}\nepoch\tL_c\tL_r\tL*\tdev_F1", file=log)
            sub = TrainConfig(lam, cfg.learning_rate, cfg.epochs, cfg.batch_size, cfg.seed)
            path = f"{args.out_model}.lam{lam:.1f}"
            _train_once(args, sub, corpus, dev, rules, path, log)
            model = ScorerModel.load(path)
            result = Parser(model, corpus.vocab, rules).evaluate(dev)[0] if dev else None
            rows.append((lam, result))
        print("lambda\tLR\tLP\tF1")
        for lam, result in rows:
            if result is None:
                print(f"{lam:.1f}\t-\t-\t-")
            else:
                print(f"{lam:.1f}\t{result.LR:.2f}\t{result.LP:.2f}\t{result.F1:.2f}")
    finally:
        if log is not sys.stdout:
            log.close()


def _read_inputs(path):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    if not text.strip():
        return []
    if text.lstrip().startswith("("):
        return [(t.words(), t.pos()) for t in parse_bracketed(text)]
    return [(line.split(), None) for line in text.splitlines() if line.strip()]


def cmd_decode(args):
    vocab = LabelVocab.load(args.vocab or args.model + ".vocab")
    model = ScorerModel.load(args.model)
    if model.num_labels != len(vocab):
        raise CliError(f"model scores {model.num_labels} labels but the vocabulary has {len(vocab)}")
    rules = build_rule_tensor(RuleSet.load(args.rules, vocab), vocab) if args.rules else None
    decoder = args.decoder
    if decoder == "rule-based" and rules is None:
        raise CliError("--decoder rule-based needs --rules")
    parser = Parser(model, vocab, rules)
    meta_path = args.meta or args.out + ".meta.tsv"
    with open(args.out, "w", encoding="utf-8") as out, open(meta_path, "w", encoding="utf-8") as meta:
        meta.write("index\tfallback\troot_score\trule_count\n")
        for k, (words, pos) in enumerate(_read_inputs(args.input)):
            tree, info = parser.parse(words, pos, decoder, fallback=args.fallback)
            out.write(serialize_bracketed(tree) + "\n")
            meta.write(f"{k}\t{'yes' if info.fallback else 'no'}\t{info.root_score!r}\t{info.rule_count}\n")


def cmd_eval(args):
    gold = load_trees(args.gold)
    pred = load_trees(args.pred)
    result = evaluate(gold, pred)
    print("matched\tgold\tpred\tLR\tLP\tF1")
    print(result.tsv())
    print(result.summary())


def cmd_coverage(args):
    vocab = LabelVocab.load(args.vocab)
    train_rules = RuleSet.load(args.rules, vocab)
    trees = [p for p in map(prepare_tree, _load_nonempty_trees(args.test)) if p is not None]
    shared = extend_vocab(vocab, trees, args.scheme)
    stats = rule_coverage(train_rules, prepare_corpus(trees, args.scheme, shared).rules())
    print("raw_recall\tweighted_recall\tunseen_rule_count")
    print(stats.format())


def _random_rules(rng, nlab, count):
    total = nlab ** 3
    picks = rng.choice(total, size=min(count, total), replace=False)
    return RuleSet({(int(p // (nlab * nlab)), int(p // nlab % nlab), int(p % nlab)): 1 for p in picks})


def cmd_bench(args):
    rng = np.random.default_rng(args.seed if args.seed is not None else _default_seed())
    vocab = LabelVocab(["@"] + [f"L{k}" for k in range(1, args.labels)])
    print("n\tvariant\tmean_ms\tbulk_steps\tchecksum\tagree")
    for n in args.n:
        scores = SpanScores.random(n, args.labels, rng)
        ruleset = _random_rules(rng, args.labels, args.rules)
        tensor = build_rule_tensor(ruleset, vocab)
        variants = [
            ("cky_sequential", lambda: cky_sequential(scores)),
            ("cky_fast", lambda: cky_fast(scores)),
            ("rule_cky_sequential", lambda: rule_cky_sequential(scores, ruleset)),
            ("rule_cky_fast", lambda: rule_cky_fast(scores, tensor)),
        ]
        results = {}
        for name, fn in variants:
            times = []
            for _ in range(args.repeats):
                start = time.perf_counter()
                res = fn()
                times.append(time.perf_counter() - start)
            results[name] = (res, 1000 * sum(times) / len(times))
        for plain, fast in (("cky_sequential", "cky_fast"), ("rule_cky_sequential", "rule_cky_fast")):
            agree = results[plain][0].same_tables(results[fast][0])
            for name in (plain, fast):
                res, ms = results[name]
                print(f"{n}\t{name}\t{ms:.3f}\t{res.steps}\t{res.score!r}\t{'yes' if agree else 'no'}")


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="rulecky", description="Rule-constrained CKY constituency parsing toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extract", help="binarize a treebank and write its rules and label vocabulary")
    e.add_argument("--input", required=True)
    e.add_argument("--scheme", choices=["dollar", "dollar-left"], default="dollar")
    e.add_argument("--out-rules", required=True)
    e.add_argument("--out-vocab", required=True)
    e.set_defaults(func=cmd_extract)

    t = sub.add_parser("train", help="train the span scorer with the joint hinge loss")
    t.add_argument("--train", required=True)
    t.add_argument("--dev")
    t.add_argument("--rules", help="rule TSV; extracted from --train when omitted")
    t.add_argument("--vocab", help="label vocabulary; built from --train when omitted")
    t.add_argument("--scheme", choices=["dollar", "dollar-left"], default="dollar")
    t.add_argument("--lambda", dest="lam", type=_lambda)
    t.add_argument("--lambda-sweep", action="store_true", help="train for lambda = 0.0, 0.1, ..., 1.0")
    t.add_argument("--config", help="key=value file (lambda, lr, epochs, batch, seed)")
    t.add_argument("--lr", type=float)
    t.add_argument("--epochs", type=_positive_int)
    t.add_argument("--seed", type=int)
    t.add_argument("--dim", type=_positive_int, default=64)
    t.add_argument("--hidden", type=_positive_int, default=250)
    t.add_argument("--log")
    t.add_argument("--out-model", required=True)
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("decode", help="parse sentences or re-parse trees with a trained model")
    d.add_argument("--model", required=True)
    d.add_argument("--vocab")
    d.add_argument("--rules")
    d.add_argument("--input", required=True)
    g = d.add_mutually_exclusive_group()
    g.add_argument("--decoder", choices=["rule-based", "unconstrained"])
    g.add_argument("--rule-based", dest="decoder", action="store_const", const="rule-based")
    g.add_argument("--unconstrained", dest="decoder", action="store_const", const="unconstrained")
    d.add_argument("--fallback", action=argparse.BooleanOptionalAction, default=True)
    d.add_argument("--out", required=True)
    d.add_argument("--meta")
    d.set_defaults(func=cmd_decode, decoder="rule-based")

    v = sub.add_parser("eval", help="labelled bracket precision/recall/F1")
    v.add_argument("--gold", required=True)
    v.add_argument("--pred", required=True)
    v.set_defaults(func=cmd_eval)

    c = sub.add_parser("coverage", help="recall of test-set rules against training rules")
    c.add_argument("--rules", required=True)
    c.add_argument("--vocab", required=True)
    c.add_argument("--test", required=True)
    c.add_argument("--scheme", choices=["dollar", "dollar-left"], default="dollar")
    c.set_defaults(func=cmd_coverage)

    b = sub.add_parser("bench", help="time sequential vs fast decoders on random charts")
    b.add_argument("--n", type=_int_list, default=[10, 20, 40])
    b.add_argument("--labels", type=_positive_int, default=10)
    b.add_argument("--rules", type=_positive_int, default=40)
    b.add_argument("--repeats", type=_positive_int, default=3)
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (RuleckyError, CliError, ValueError, OSError) as e:
        print(f"rulecky: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
