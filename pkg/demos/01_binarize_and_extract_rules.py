"""
From a bracketed tree to a grammar
==================================

Read a treebank tree, collapse unary chains, binarize it left-branching and
list the binary productions it licenses, under both labelling schemes.
"""

from rulecky import (
    LabelingScheme,
    binarize_left,
    build_vocab,
    debinarize,
    extract_rules,
    parse_bracketed,
)
from rulecky.treebank import prepare_tree

text = ("(S (RB Today) (NP (DT the) (NN weather)) "
        "(VP (VBZ is) (VP (VBG getting) (ADJP (RB very) (JJ cold)))))")
(tree,) = parse_bracketed(text)
print("words:", " ".join(tree.words()))

tree = prepare_tree(tree)  # strips function tags, drops traces, collapses unaries

for scheme in LabelingScheme:
    vocab = build_vocab([tree], scheme)
    btree = binarize_left(tree, scheme, vocab)
    print(f"\n== scheme: {scheme.value}")
    print("binarized:", btree.to_string(vocab))
    for rule in sorted(extract_rules([btree]).to_strings(vocab)):
        print("   {} -> {} {}".format(*rule))
    # the binarization is invertible given the original POS tags
    assert debinarize(btree, vocab, tree.pos()) == tree

# unary chains become a single compound label and are restored afterwards
(chain,) = parse_bracketed("(S (VP (VB go)) (NP (NP (PRP it))))")
print("\ncollapsed:", prepare_tree(chain))
