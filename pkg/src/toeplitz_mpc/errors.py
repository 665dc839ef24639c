"""Exception hierarchy shared by every module of the package."""


class ToeplitzMpcError(Exception):
    """Base class for all errors raised by this package."""


# linear algebra
class NotPositiveDefinite(ToeplitzMpcError):
    pass


class NonSymmetric(ToeplitzMpcError):
    pass


class NonHermitian(ToeplitzMpcError):
    pass


class Singular(ToeplitzMpcError):
    pass


class NoConvergence(ToeplitzMpcError):
    pass


# models and files
class WrongDomain(ToeplitzMpcError):
    pass


class DimensionMismatch(ToeplitzMpcError):
    pass


class UnknownName(ToeplitzMpcError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ParseError(ToeplitzMpcError):
    """Malformed model file; carries the 1-based line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


# control / spectral
class NotStable(ToeplitzMpcError):
    pass


class SymbolUnavailable(ToeplitzMpcError):
    pass


class SingularResolvent(ToeplitzMpcError):
    pass


class ContainmentViolated(ToeplitzMpcError):
    def __init__(self, eigenvalue, horizon, interval):
        self.eigenvalue = eigenvalue
        self.horizon = horizon
        self.interval = interval
        super().__init__(
            f"eigenvalue {eigenvalue!r} of the N={horizon} Hessian lies "
            f"outside [{interval[0]!r}, {interval[1]!r}]"
        )


class InfeasibleProjection(ToeplitzMpcError):
    pass
