"""Exception hierarchy shared by all modules."""


class RuleckyError(Exception):
    """Base class for every error raised by this package."""


class TreeFormatError(RuleckyError, ValueError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} at offset {position}"
        super().__init__(message)
        self.position = position


class UnbalancedParens(TreeFormatError):
    pass


class EmptyNode(TreeFormatError):
    pass


class LeafWithoutWord(TreeFormatError):
    pass


class EmptySentence(RuleckyError, ValueError):
    pass


class LengthMismatch(RuleckyError, ValueError):
    pass


class UnknownLabel(RuleckyError, KeyError):
    pass


class EmptyRuleSet(RuleckyError, ValueError):
    pass


class EmptyTestSet(RuleckyError, ValueError):
    pass


class NonFiniteScore(RuleckyError, ValueError):
    pass


class NonFiniteParameter(RuleckyError, ValueError):
    pass


class InconsistentChart(RuleckyError, ValueError):
    pass


class NoDerivation(RuleckyError):
    """No tree over the sentence uses only productions from the rule set."""


class DimensionMismatch(RuleckyError, ValueError):
    pass


class LabelOutOfVocab(RuleckyError, IndexError):
    pass


class YieldMismatch(RuleckyError, ValueError):
    def __init__(self, index, message=None):
        super().__init__(message or f"yield mismatch in sentence {index}")
        self.index = index
