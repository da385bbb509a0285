"""
Training the span scorer on a synthetic treebank
================================================

Sample trees from a small PCFG, train with the joint hinge loss and compare
the two decoders on held-out sentences.  Small sizes keep this under a minute.
"""

import time

from rulecky import ScorerModel, TrainConfig, build_rule_tensor, train
from rulecky.pipeline import Parser, prepare_corpus
from rulecky.toy import toy_treebank

train_trees = toy_treebank(600, seed=1)
test_trees = toy_treebank(100, seed=2)
corpus = prepare_corpus(train_trees)
rules = build_rule_tensor(corpus.rules(), corpus.vocab)
print(f"labels: {' '.join(corpus.vocab.labels)}")
print(f"{len(corpus.rules())} binary rules, at most {rules.rmax} per parent label")

cfg = TrainConfig(lam=0.4, learning_rate=0.01, epochs=5, batch_size=16, seed=777)
model = ScorerModel.init(len(corpus.vocab), seed=cfg.seed)
start = time.perf_counter()


def log(stats, current):
    parser = Parser(current, corpus.vocab, rules)
    ruled = parser.evaluate(test_trees, "rule-based")[0].F1
    plain = parser.evaluate(test_trees, "unconstrained")[0].F1
    print(f"epoch {stats.epoch}  L_c={stats.mean_lc:6.3f}  L_r={stats.mean_lr:6.3f}  "
          f"F1 rule-based={ruled:6.2f}  unconstrained={plain:6.2f}  ({time.perf_counter() - start:.0f}s)")


model = train(model, corpus.gold(), rules, cfg, on_epoch=log)

parser = Parser(model, corpus.vocab, rules)
sentence = test_trees[0]
tree, info = parser.parse(sentence.words(), sentence.pos())
print("\ngold :", sentence)
print("pred :", tree, "(fallback)" if info.fallback else "")
