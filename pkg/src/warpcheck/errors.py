"""Exception hierarchy. Every error carries a stable string ``code``."""


class WarpcheckError(Exception):
    code = "ERROR"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def __str__(self):
        base = super().__str__()
        return f"{self.code}: {base}" if base else self.code


class ConeViolation(WarpcheckError):
    code = "CONE_VIOLATION"


class EmptyInput(WarpcheckError):
    code = "EMPTY_INPUT"


class BadCurvature(WarpcheckError):
    code = "BAD_CURVATURE"


class OutOfDomain(WarpcheckError):
    code = "OUT_OF_DOMAIN"


class GeometryInvalid(WarpcheckError):
    code = "GEOMETRY_INVALID"


class UnsupportedManifold(WarpcheckError):
    code = "UNSUPPORTED_MANIFOLD"


class PotentialSign(WarpcheckError):
    code = "POTENTIAL_SIGN"


class AssumptionViolated(WarpcheckError):
    code = "ASSUMPTION_VIOLATED"


class StepRejected(WarpcheckError):
    code = "STEP_REJECTED"


class ConfigInvalid(WarpcheckError):
    code = "CONFIG_INVALID"
