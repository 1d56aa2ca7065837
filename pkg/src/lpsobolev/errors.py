"""Exception hierarchy.

Every error carries a short ``kind`` string; the command line front end
reports it in structured form and maps it to an exit code.
"""


class LpSobolevError(Exception):
    kind = "internal"


class InputError(LpSobolevError, ValueError):
    kind = "input"


class UnboundedBody(InputError):
    pass


class EmptyInterior(InputError):
    pass


class SingularMatrix(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class EmptyMeasure(InputError):
    pass


class TrivialFunction(InputError):
    pass


class QuadratureMissing(InputError):
    pass


class NonpositiveSupport(LpSobolevError, ValueError):
    kind = "geometry"


class HemisphereViolation(LpSobolevError, ValueError):
    kind = "hemisphere"


class NotConverged(LpSobolevError, RuntimeError):
    kind = "not_converged"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class MeshOverlayFailure(LpSobolevError, RuntimeError):
    kind = "mesh_overlay"


class DegenerateDirection(LpSobolevError, ValueError):
    kind = "degenerate_direction"


class DivergentIntegral(LpSobolevError, ArithmeticError):
    kind = "divergent_integral"
