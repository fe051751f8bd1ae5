"""Exception hierarchy shared across the package.

Every error carries a short ``code`` used in machine-readable output.
"""


class TransportError(Exception):
    code = "TransportError"

    def to_json(self) -> dict:
        return {"type": self.code, "message": str(self)}


# -- input / validation ------------------------------------------------------

class ValidationError(TransportError, ValueError):
    code = "ValidationError"


class EmptyDataset(ValidationError):
    code = "EmptyDataset"


class MissingArmData(ValidationError):
    code = "MissingArmData"


class TargetWithOutcome(ValidationError):
    code = "TargetWithOutcome"


class NonFiniteValue(ValidationError):
    code = "NonFiniteValue"


class NegativeCovariate(ValidationError):
    code = "NegativeCovariate"


class DegenerateTrial(ValidationError):
    code = "DegenerateTrial"


class MissingTarget(ValidationError):
    code = "MissingTarget"


class MalformedRow(ValidationError):
    code = "MalformedRow"


class ConfigError(ValidationError):
    code = "ConfigError"


class InvalidParameter(TransportError, ValueError):
    code = "InvalidParameter"


class DimensionMismatch(TransportError, ValueError):
    code = "DimensionMismatch"


# -- numerical ---------------------------------------------------------------

class NumericalError(TransportError, ArithmeticError):
    code = "NumericalError"


class RankDeficient(NumericalError):
    code = "RankDeficient"


class Separation(NumericalError):
    code = "Separation"


class DegenerateLabels(NumericalError):
    code = "DegenerateLabels"


class NonConvergentTail(NumericalError):
    code = "NonConvergentTail"


class ZeroVariance(NumericalError):
    code = "ZeroVariance"


# -- harness -----------------------------------------------------------------

class ReplicationFailed(NumericalError):
    code = "ReplicationFailed"


class InsufficientReplications(TransportError, ValueError):
    code = "InsufficientReplications"
