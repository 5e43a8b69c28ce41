"""Exception hierarchy.

Errors that carry a numerical best effort (Newton solvers, quadrature) keep it
on the exception so callers can decide whether the partial answer is usable.
"""


class TroAmoebaError(Exception):
    """Base class for all package errors."""


class ValidationError(TroAmoebaError):
    """Input data violates a structural precondition (CLI exit code 1)."""


class NumericalError(TroAmoebaError):
    """A numerical procedure failed to reach its tolerance (CLI exit code 2)."""


# polytope
class NotBounded(ValidationError):
    pass


class EmptyInterior(ValidationError):
    pass


class NonPrimitiveNormal(ValidationError):
    pass


class NotDelzant(ValidationError):
    def __init__(self, message, vertex=None, determinant=None, facets=None):
        super().__init__(message)
        self.vertex = vertex
        self.determinant = determinant
        self.facets = facets


class OutsidePolytope(ValidationError):
    pass


class NotAVertex(ValidationError):
    pass


# potential
class BoundaryEvaluation(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class NotInImage(NumericalError):
    pass


class NewtonDiverged(NumericalError):
    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class MaxIterationsExceeded(NewtonDiverged):
    pass


# tropical / amoeba / projection
class DegenerateInput(ValidationError):
    pass


class EmptyPolynomial(ValidationError):
    pass


class EmptySample(ValidationError):
    pass


class SpaceMismatch(ValidationError):
    pass


class NoFaceAccepted(NumericalError):
    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class RayNotStabilized(NumericalError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class NotQuadratic(ValidationError):
    pass


class DegenerateVoronoi(NumericalError):
    pass


# quantization
class QuadratureNotConverged(NumericalError):
    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


# scenario
class SchemaError(ValidationError):
    def __init__(self, path, message=""):
        super().__init__(f"{path}: {message}" if message else path)
        self.path = path


class SemanticError(ValidationError):
    pass


class EmptyScene(ValidationError):
    pass
