"""Exception hierarchy shared across the package."""


class RtgeError(Exception):
    """Base class for all package-specific errors."""


class ParseError(RtgeError):
    """A dataset line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ValidationError(RtgeError):
    """Semantically invalid input (e.g. start year after end year)."""


class EmptyDomainError(RtgeError):
    """No bounded years anywhere, so no time binning can be built."""


class SamplerUnavailableError(RtgeError):
    """Requested corruption cannot be produced (e.g. a single relation)."""


class DivergenceError(RtgeError):
    """Objective became non-finite during training."""

    def __init__(self, iteration):
        super().__init__(f"objective became non-finite at iteration {iteration}")
        self.iteration = iteration


class CheckpointError(RtgeError):
    """Checkpoint file is unreadable, truncated or inconsistent."""


class CheckpointVersionError(CheckpointError):
    """Unknown checkpoint header/version."""


class CheckpointTruncatedError(CheckpointError):
    """Checkpoint ended before all declared rows were read."""


class CheckpointDimensionError(CheckpointError):
    """A checkpoint row does not match the declared dimension or id range."""


class VocabularyError(RtgeError):
    """An id falls outside the graph's entity/relation/bin vocabulary."""
