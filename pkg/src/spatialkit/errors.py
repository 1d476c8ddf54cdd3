"""Exception hierarchy shared across the pipeline.

Every failure that can abort a query carries a ``stage`` attribute naming
the pipeline stage it belongs to (reconstruction, program-generation,
execution, answer) so the bench harness can bucket failures.
"""


class SpatialError(Exception):
    """Base class for all library errors."""

    stage: str | None = None


# --- geometry ---------------------------------------------------------------

class InvalidDepthError(SpatialError):
    """Depth value is non-positive or non-finite."""


class InsufficientViewsError(SpatialError):
    """Fewer than two poses were given to a motion description."""


class EmptyCloudError(SpatialError):
    """Point-cloud construction or rendering received/produced no points."""


# --- reconstruction backends -------------------------------------------------

class BundleError(SpatialError):
    stage = "reconstruction"


class BundleLoadError(BundleError):
    """A bundle directory failed validation; message names the file/field."""


class MissingFileError(BundleLoadError):
    pass


class MalformedManifestError(BundleLoadError):
    pass


class ShapeMismatchError(BundleLoadError):
    pass


class MalformedRasterError(BundleLoadError):
    pass


class InvalidPoseError(BundleLoadError):
    pass


class BackendFailureError(BundleError):
    """Remote reconstruction service returned a non-success status."""


class MalformedArchiveError(BundleError):
    """Remote reconstruction response could not be unpacked."""


class TransportError(SpatialError):
    """Network-level failure (timeout, connection, exhausted retries)."""

    def __init__(self, message, last_status=None):
        super().__init__(message)
        self.last_status = last_status


class AuthError(TransportError):
    """Credential rejected; never retried."""


# --- program language ---------------------------------------------------------

class SplError(SpatialError):
    """Base for program-language errors; carries a source location."""

    stage = "execution"

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


class SplSyntaxError(SplError):
    stage = "program-generation"


class IllegalCharacterError(SplSyntaxError):
    pass


class IndentationMixError(SplSyntaxError):
    pass


class ForbiddenConstructError(SplSyntaxError):
    pass


class EntryFunctionError(SplSyntaxError):
    pass


class SplRuntimeError(SplError):
    """Base for sandbox runtime errors; carries the partial trace."""

    def __init__(self, message, line=None, col=None, trace=None):
        super().__init__(message, line, col)
        self.trace = list(trace or [])


class UnknownNameError(SplRuntimeError):
    pass


class TypeMismatchError(SplRuntimeError):
    pass


class IndexOutOfRangeError(SplRuntimeError):
    pass


class StepLimitError(SplRuntimeError):
    pass


class LoopLimitError(StepLimitError):
    """Iteration cap on a single loop; a step-limit specialization."""


class ImageBudgetError(SplRuntimeError):
    pass


class WallClockError(SplRuntimeError):
    pass


# --- bench --------------------------------------------------------------------

class DatasetError(SpatialError):
    """Malformed benchmark record or missing referenced image."""


# --- agent --------------------------------------------------------------------

class ExtractionError(SpatialError):
    """No fenced code block found in a code-generation response."""

    stage = "program-generation"


class CodegenFailureError(SpatialError):
    """Program generation exhausted its retry budget."""

    stage = "program-generation"

    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = attempts


class ChoiceParseError(SpatialError):
    stage = "answer"
