"""Exception types shared across the pipeline."""


class DocpipeError(Exception):
    """Base class for pipeline errors."""


class GeometryError(DocpipeError):
    """Degenerate or self-intersecting polygon input."""


class BackendError(DocpipeError):
    """A neural-stage backend violated its contract or failed.

    ``kind`` names the backend family (detector, recognizer, nli,
    summarizer, upscaler) when known; the service layer reports it.
    """

    def __init__(self, message, kind=None):
        super().__init__(message)
        self.kind = kind


class BackendUnavailable(BackendError):
    """Backend process missing, crashed, or timed out."""


class ProtocolError(BackendError):
    """Malformed wire frame: bad framing, truncated payload, id mismatch."""


class GtParseError(DocpipeError):
    """Ground-truth file rejected; carries the 1-based line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ConfigError(DocpipeError):
    """Invalid configuration key or value."""
