"""Exception types raised by the simulation modules."""


class CDTSimError(Exception):
    """Base class for all library errors."""

    code = "error"


class GridTooCoarse(CDTSimError):
    code = "grid_too_coarse"


class NoBoundState(CDTSimError):
    code = "no_bound_state"


class DegeneracyWarning(UserWarning):
    """Two adjacent bound-state energies coincide to within 1e-12."""


class LocalizationFailure(CDTSimError):
    code = "localization_failure"


class CalibrationOutOfBracket(CDTSimError):
    code = "calibration_out_of_bracket"


class StabilityError(CDTSimError):
    code = "stability"


class StepTooLarge(CDTSimError):
    code = "step_too_large"


class NoCrossingInBracket(CDTSimError):
    code = "no_crossing_in_bracket"


class InsufficientSpan(CDTSimError):
    code = "insufficient_span"


class ParseError(CDTSimError):
    code = "parse"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(CDTSimError):
    code = "validation"

    def __init__(self, key: str, message: str = ""):
        super().__init__(f"{key}: {message}" if message else key)
        self.key = key
