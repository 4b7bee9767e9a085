"""Exception types shared across the toolchain."""


class MainAnnotateError(Exception):
    """Base class for all errors raised by this package."""


# --- transcript parsing ---

class EmptyTranscript(MainAnnotateError):
    """The file contains no speaker tiers."""


class MalformedTier(MainAnnotateError):
    """A tier line is missing its tab separator or tier code."""

    def __init__(self, lineno: int, line: str):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: malformed tier: {line!r}")


class UnknownStory(MainAnnotateError):
    """Story identity is neither in the file header nor supplied by overrides."""


# --- annotation files ---

class AnnotationFormatError(MainAnnotateError):
    """An annotation JSON file violates the schema."""


# --- LLM client ---

class ConfigError(MainAnnotateError):
    """Model profile configuration is invalid or incomplete."""


class AuthError(MainAnnotateError):
    """The endpoint rejected our credentials (401/403); not retryable."""


class RequestRejected(MainAnnotateError):
    """Non-retryable client-side failure (4xx other than 429)."""


class TransientExhausted(MainAnnotateError):
    """Transient failures persisted through every allowed retry."""


class MalformedResponse(MainAnnotateError):
    """The endpoint answered but returned no usable text content."""


# --- agreement ---

class EmptyItems(MainAnnotateError):
    """Kappa requested over zero judgment items."""


class InsufficientRaters(MainAnnotateError):
    """Fewer than two raters share any narrative."""
