"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``reason`` so the CLI can put it
in the run report and map it to an exit code.
"""


class AxiflowError(Exception):
    reason = "error"

    def __init__(self, message="", **info):
        super().__init__(message)
        self.info = info

    def as_dict(self):
        out = {"reason": self.reason, "message": str(self)}
        out.update({k: v for k, v in self.info.items() if _jsonable(v)})
        return out


def _jsonable(v):
    return isinstance(v, (int, float, str, bool, type(None), list, tuple))


class ConfigError(AxiflowError):
    reason = "config_error"


class NumericalFailure(AxiflowError):
    """Base for failures raised while integrating or differentiating."""
    reason = "numerical_failure"


class DomainError(NumericalFailure):
    reason = "out_of_domain"


class OutOfDomain(DomainError):
    reason = "out_of_domain"


class NegativeRadius(DomainError):
    reason = "negative_radius"


class LeftDomain(DomainError):
    reason = "left_domain"

    def __init__(self, message="", partial=None, **info):
        super().__init__(message, **info)
        self.partial = partial


class ThirdOrderUnavailable(NumericalFailure):
    reason = "third_order_unavailable"


class NotUnilateral(NumericalFailure):
    reason = "not_unilateral"


class StiffnessFailure(NumericalFailure):
    reason = "stiffness_failure"


class DegenerateSpeed(NumericalFailure):
    reason = "degenerate_speed"


class Degenerate(NumericalFailure):
    reason = "degenerate_frame"


class InsufficientSpan(NumericalFailure):
    reason = "insufficient_span"


class TubeViolation(NumericalFailure):
    reason = "tube_violation"


class DegenerateTube(NumericalFailure):
    reason = "degenerate_tube"


class SeedSpacingTooCoarse(NumericalFailure):
    reason = "seed_spacing_too_coarse"


class OutsideTubeRange(NumericalFailure):
    reason = "outside_tube_range"


class NonMonotone(NumericalFailure):
    reason = "non_monotone"


class StagnantPoint(NumericalFailure):
    reason = "stagnant_point"


class StagnantAxis(StagnantPoint):
    reason = "stagnant_axis"


class StepTooLarge(NumericalFailure):
    reason = "step_too_large"


class ZeroFlux(NumericalFailure):
    reason = "zero_flux"


class ValidationFailure(AxiflowError):
    reason = "validation_failure"
