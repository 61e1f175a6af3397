"""Exception hierarchy shared by every stage of the pipeline."""


class RadarError(Exception):
    """Base class for all errors raised by this package."""

    kind = "RadarError"


class ModelError(RadarError):
    """Problems with the model source itself (exit code 2 in the CLI)."""

    kind = "ModelError"


class IoError(ModelError):
    """The model file could not be read."""

    kind = "IoError"


class SourceError(ModelError):
    """A model error tied to a line/column in the source text."""

    kind = "SourceError"

    def __init__(self, message, line=0, col=0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class LexError(SourceError):
    kind = "LexError"


class ParseError(SourceError):
    kind = "ParseError"

    def __init__(self, message, line=0, col=0, expected=()):
        self.expected = frozenset(expected)
        if self.expected:
            message = f"{message} (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(message, line, col)


class SemanticError(ModelError):
    """One or more semantic problems; ``issues`` holds (message, line, col) triples."""

    kind = "SemanticError"

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [(issues, 0, 0)]
        self.issues = list(issues)
        first = self.issues[0]
        self.line, self.col = first[1], first[2]
        text = "; ".join(f"{line}:{col}: {msg}" for msg, line, col in self.issues)
        super().__init__(text)


class InvalidDistribution(SemanticError):
    kind = "InvalidDistribution"


class AnalysisError(RadarError):
    """Failures while analysing a valid model (exit code 3 in the CLI)."""

    kind = "AnalysisError"


class DesignSpaceOverflow(AnalysisError):
    kind = "DesignSpaceOverflow"

    def __init__(self, size, cap):
        self.size = size
        self.cap = cap
        super().__init__(f"design space has {size} solutions, above the cap of {cap}")


class NumericError(AnalysisError):
    kind = "NumericError"

    def __init__(self, message, solution=None, run=None, line=0, col=0):
        self.solution = solution
        self.run = run
        self.line = line
        self.col = col
        super().__init__(
            f"{message} (solution {solution}, run {run}, at {line}:{col})"
        )


class CapacityError(AnalysisError):
    kind = "CapacityError"


class BenchmarkTimeout(AnalysisError):
    kind = "Timeout"


class ConfigError(RadarError, ValueError):
    kind = "ConfigError"


class LengthMismatch(RadarError, ValueError):
    kind = "LengthMismatch"
