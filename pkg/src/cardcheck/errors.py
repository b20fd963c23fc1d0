"""Exception types shared across the toolkit."""


class CardcheckError(Exception):
    """Base class for all toolkit errors."""


class UnresolvedColumn(CardcheckError):
    """A column reference does not resolve against the known tables."""


class UnsupportedFeature(CardcheckError):
    """The target dialect cannot express a query node (e.g. FULL JOIN on MySQL)."""


class RuleNotApplicable(CardcheckError):
    """applyRule was called with a rule whose source pattern is absent."""


class NoApplicableRule(CardcheckError):
    """No restriction rule applies to the query; the caller should regenerate."""


class MalformedPlan(CardcheckError):
    """EXPLAIN output could not be parsed into a plan tree."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class MissingEstimate(CardcheckError):
    """The plan root carries no estimated row count."""


class SqlParseError(CardcheckError):
    """A SQL statement could not be parsed by the reference engine."""


class StatementError(CardcheckError):
    """A setup statement failed during engine replay."""

    def __init__(self, message, index=None):
        self.index = index
        if index is not None:
            message = f"{message} (statement {index})"
        super().__init__(message)


class EvalError(CardcheckError):
    """Expression evaluation hit a type mismatch or unknown function."""


class StaleStats(CardcheckError):
    """Table statistics are out of date; ANALYZE is required before estimation."""


class NotReproducible(CardcheckError):
    """The test case handed to the reducer does not fail to begin with."""


class AdapterUnavailable(CardcheckError):
    """The target DBMS cannot be reached or refused the connection."""
