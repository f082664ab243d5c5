"""Exception hierarchy shared by all modules."""


class ToralRigidityError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ToralRigidityError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# exact linear algebra
class DegenerateMatrix(ToralRigidityError):
    pass


class NotUnimodular(ToralRigidityError):
    pass


# centralizer
class NotIrreducible(ToralRigidityError):
    pass


class RankNotReached(ToralRigidityError):
    """Fewer independent units were located than the Dirichlet rank predicts.

    ``partial`` holds the best generator set that was found (or None).
    """

    def __init__(self, message, partial=None, found=0, expected=0):
        super().__init__(message)
        self.partial = partial
        self.found = found
        self.expected = expected


class PrecisionExhausted(ToralRigidityError):
    pass


class OddDimension(ToralRigidityError):
    pass


class HypothesisViolation(ToralRigidityError):
    def __init__(self, clause, message):
        self.clause = clause
        super().__init__(f"{clause}: {message}")


# lyapunov geometry
class NotSimultaneouslyDiagonalizable(ToralRigidityError):
    pass


class DegenerateSpectrum(ToralRigidityError):
    pass


class EmptyCone(ToralRigidityError):
    pass


class NoLatticePoint(ToralRigidityError):
    pass


# conjugacy solver
class NotHyperbolic(ToralRigidityError):
    pass


class NonInvertible(ToralRigidityError):
    pass


class NoConvergence(ToralRigidityError):
    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile if profile is not None else []


class InsufficientSamples(ToralRigidityError):
    pass


class BranchAmbiguity(ToralRigidityError):
    pass


class NotContracting(ToralRigidityError):
    pass


# hyperbolicity certifier
class NotSubadditive(ToralRigidityError):
    pass


class HorizonExceeded(ToralRigidityError):
    pass


class NewtonDiverged(ToralRigidityError):
    pass


class NonPeriodic(ToralRigidityError):
    pass


class OrbitMismatch(ToralRigidityError):
    pass
