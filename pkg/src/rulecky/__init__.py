"""Conventional and rule-constrained CKY decoding for span-based constituency parsing."""

__version__ = "0.1.0"

from .chart import ChartResult, SpanScores, cky_fast, cky_sequential, decode_tree, tree_score
from .errors import NoDerivation, RuleckyError
from .evaluation import EvalResult, coverage_report, evaluate
from .grammar import (
    CoverageStats,
    RuleSet,
    RuleTensor,
    build_rule_tensor,
    extract_rules,
    rule_coverage,
)
from .rule_decoder import (
    RuleChartResult,
    parse_with_rules,
    rule_cky_fast,
    rule_cky_sequential,
    rule_decode_tree,
)
from .scorer import ScorerModel, encode, score_spans, span_vector
from .trainer import (
    GoldAnnotation,
    Mode,
    TrainConfig,
    hamming_augment,
    hinge_loss,
    joint_loss,
    train,
)
from .treebank import (
    BinaryTree,
    LabelingScheme,
    LabelVocab,
    Tree,
    binarize_left,
    build_vocab,
    collapse_unary_chains,
    debinarize,
    labeled_spans,
    parse_bracketed,
    serialize_bracketed,
)
