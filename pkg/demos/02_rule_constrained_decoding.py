"""
Why constrain CKY with grammar rules
====================================

A three-word chart where the best unconstrained tree uses a production the
grammar never saw.  The rule-constrained decoder returns the best tree whose
every production is in the rule set, at a slightly lower score.
"""

from rulecky import (
    LabelVocab,
    RuleSet,
    SpanScores,
    build_rule_tensor,
    cky_fast,
    decode_tree,
    rule_cky_fast,
    rule_decode_tree,
    tree_score,
)

vocab = LabelVocab(["@", "IN", "NP", "PP"])
AT, IN, NP, PP = (vocab.id(x) for x in ["@", "IN", "NP", "PP"])
words = ["in", "the", "house"]

# per-span label scores; a span-local model likes PP over the first word
scores = SpanScores.from_spans(3, len(vocab), {
    (0, 1): [0.0, 2.0, 0.0, 3.0],
    (1, 2): [1.0, 0.0, 0.0, 0.0],
    (2, 3): [1.0, 0.0, 0.0, 0.0],
    (1, 3): [0.0, 0.0, 2.0, 0.0],
    (0, 2): [0.0, 0.0, 0.0, 0.0],
    (0, 3): [0.0, 0.0, 0.0, 2.0],
})
rules = RuleSet({(PP, IN, NP): 1, (NP, AT, AT): 1})
print("grammar:", sorted(rules.to_strings(vocab)))

plain = decode_tree(scores, cky_fast(scores), words)
print("\nunconstrained :", plain.to_string(vocab), " score", tree_score(scores, plain))
print("  productions :", [vocab.label(p) for p, _, _ in plain.productions()],
      "->", [p in rules for p in plain.productions()])

tensor = build_rule_tensor(rules, vocab)
chart = rule_cky_fast(scores, tensor)
ruled = rule_decode_tree(scores, chart, tensor, words)
print("rule-based    :", ruled.to_string(vocab), " score", chart.score)
print("  productions :", [p in rules for p in ruled.productions()])
