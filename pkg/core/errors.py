"""
Error Types

Every failure raised by the analysis library derives from QIFError. The
exit_code attribute is what main.py returns to the shell:
1 for domain/validation failures, 2 for usage or parse problems, 3 when a
computation would exceed its configured budget.
"""


class QIFError(Exception):
    """Base class for all analysis errors."""
    exit_code = 1


# --- Domain errors (exit 1) ---

class InvalidBelief(QIFError):
    pass


class MissingSecretValues(QIFError):
    pass


class NoSubgradient(QIFError):
    pass


class BoundaryForecast(QIFError):
    pass


class InvalidMechanism(QIFError):
    pass


class UnknownAction(QIFError):
    pass


class UnknownObservation(QIFError):
    pass


class ZeroProbabilityObservation(QIFError):
    """The observation cannot occur under the current belief."""


class NotDeterministic(QIFError):
    pass


class NotNonAdaptive(QIFError):
    pass


class DuplicateSecretIds(QIFError):
    pass


class NonNumericNoiseColumn(QIFError):
    pass


class InvalidHorizon(QIFError):
    pass


class TooManyVariables(QIFError):
    pass


class TooManyStrategies(QIFError):
    pass


# --- Usage / parse errors (exit 2) ---

class ParseError(QIFError):
    exit_code = 2


class UnsupportedMeasure(QIFError):
    exit_code = 2


class ConfigError(QIFError):
    exit_code = 2


# --- Budget (exit 3) ---

class BudgetExceeded(QIFError):
    exit_code = 3
