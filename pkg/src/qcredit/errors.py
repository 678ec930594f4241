class QCreditError(Exception):
    """Base class for errors raised by qcredit."""


class DimensionError(QCreditError, ValueError):
    """Operator arity and state size disagree."""


class ReversibilityError(QCreditError, ValueError):
    """A classical map handed to a permutation operator is not a bijection."""


class SizeError(QCreditError, ValueError):
    """A problem exceeds the configured statevector or enumeration budget."""
