"""Exception types raised across the package."""


class VarProlongError(Exception):
    pass


class ZeroConstantTerm(VarProlongError, ArithmeticError):
    """Division or root of a series whose constant term is zero (or negative for roots)."""


class OrderMismatch(VarProlongError, ValueError):
    pass


class NonzeroInnerConstant(VarProlongError, ValueError):
    pass


class NotInvertible(VarProlongError, ValueError):
    pass


class OrderExceeded(VarProlongError, ValueError):
    """Not enough jet data to compute the requested derivative."""


class ZeroTimeVelocity(VarProlongError, ValueError):
    pass


class SingularReparam(VarProlongError, ValueError):
    pass


class SingularA(VarProlongError, ArithmeticError):
    pass


class NotOnShell(VarProlongError, ValueError):
    pass


class DomainError(VarProlongError, ValueError):
    """Point outside the region where 1 + V.V > 0 (or ||u||^2 > 0)."""


class NullVelocity(DomainError):
    pass


class DenominatorZero(DomainError):
    pass


class GaugeViolation(VarProlongError, ValueError):
    pass


class DomainExit(VarProlongError, RuntimeError):
    pass


class StepFailure(VarProlongError, RuntimeError):
    pass


class DegenerateFrame(VarProlongError, ValueError):
    pass


class SignatureUnsupported(VarProlongError, ValueError):
    pass


class TooFewSamples(VarProlongError, ValueError):
    pass
