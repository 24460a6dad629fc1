"""Exception hierarchy shared by all modules."""


class QArrowError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 2


class ValidationError(QArrowError, ValueError):
    pass


class IdenticalAlternatives(ValidationError):
    pass


class DegeneratePairs(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class TooFewAlternatives(ValidationError):
    pass


class UnsupportedK(ValidationError):
    pass


class AsymmetricDistribution(ValidationError):
    pass


class SameVoter(ValidationError):
    pass


class InvalidCorrelation(ValidationError):
    pass


class NotTransitive(ValidationError):
    def __init__(self, message, ranking=None):
        super().__init__(message)
        self.ranking = ranking


class HypothesisFailed(QArrowError):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ConstructionFailed(QArrowError, RuntimeError):
    pass


class BudgetExceeded(QArrowError):
    exit_code = 3

    def __init__(self, required, budget):
        super().__init__(f"enumeration needs {required} states, budget is {budget}")
        self.required = required
        self.budget = budget
