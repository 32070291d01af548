"""Exception hierarchy shared by the solvers, the simulator and the CLI."""


class LQGameError(Exception):
    """Base class for all errors raised by this package."""


class AsymmetryError(LQGameError, ValueError):
    pass


class NotSPD(LQGameError, ValueError):
    pass


class NotHurwitz(LQGameError, ValueError):
    pass


class DimensionMismatch(LQGameError, ValueError):
    pass


# Riccati engine

class ImaginaryEigenvalues(LQGameError):
    """The Hamiltonian has purely imaginary nonzero eigenvalues."""


class NoSymmetricSolution(LQGameError):
    pass


class DimensionTooLarge(LQGameError):
    pass


class DegenerateSpectrum(LQGameError):
    """Repeated Hamiltonian eigenvalues; subset enumeration is not attempted."""


# Solvers

class AssumptionViolation(LQGameError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("standing assumptions violated: " + "; ".join(self.failures))


class BNotInvertible(LQGameError):
    def __init__(self, cond):
        self.cond = cond
        super().__init__(f"mean-equation matrix is singular or ill-conditioned (cond={cond:.3e})")


class DiscountTooLarge(LQGameError):
    """No positive definite inverse covariance exists at this discount."""


class InfeasibleAtZero(LQGameError):
    pass


class SingularConversion(LQGameError):
    pass


# Simulator

class NotAdmissible(LQGameError):
    pass


class UnstableStep(LQGameError):
    pass


class TruncationTooCoarse(LQGameError):
    pass


# CLI / config

class ParseError(LQGameError):
    pass


class ConfigValidationError(LQGameError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("game spec failed validation: " + "; ".join(self.failures))


INFEASIBLE = (ImaginaryEigenvalues, NoSymmetricSolution, BNotInvertible,
              DiscountTooLarge, InfeasibleAtZero, NotSPD)
