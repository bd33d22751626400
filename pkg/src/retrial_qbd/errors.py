"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to distinct
process exit statuses without a lookup table of its own.
"""


class RetrialQBDError(Exception):
    exit_code = 1


class InvalidParameter(RetrialQBDError, ValueError):
    exit_code = 2

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class Unstable(RetrialQBDError):
    exit_code = 3

    def __init__(self, rho):
        super().__init__(f"traffic intensity rho={rho:.12g} is not below 1")
        self.rho = rho


class NoConvergence(RetrialQBDError):
    exit_code = 4

    def __init__(self, max_l, residual=float("nan")):
        super().__init__(
            f"rate rows did not converge within {max_l} schedule steps "
            f"(last difference {residual:.3e})"
        )
        self.max_l = max_l
        self.residual = residual


class TruncationOverflow(RetrialQBDError):
    exit_code = 5

    def __init__(self, cap):
        super().__init__(f"truncation level would exceed the cap {cap}")
        self.cap = cap


class OracleMismatch(RetrialQBDError):
    exit_code = 6


class NumericalBreakdown(RetrialQBDError, ArithmeticError):
    exit_code = 7


class BoundaryResidualTooLarge(RetrialQBDError):
    exit_code = 7

    def __init__(self, residual):
        super().__init__(f"boundary equation residual {residual:.3e} too large")
        self.residual = residual


class SingularSystem(RetrialQBDError, ArithmeticError):
    exit_code = 7


class SizeBudgetExceeded(RetrialQBDError):
    exit_code = 2


class WrongServerCount(RetrialQBDError, ValueError):
    exit_code = 2
