"""Exception hierarchy. Each pipeline stage has its own error so the CLI can map it to an exit code."""


class EpiExplainError(Exception):
    exit_code = 1


class ParameterDomainError(EpiExplainError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 3


class IngestionError(EpiExplainError):
    """One or more input lines failed to parse or validate.

    ``problems`` collects every offending line as ``(path, line_no, reason)``.
    """

    exit_code = 2

    def __init__(self, message, problems=None):
        self.problems = list(problems or [])
        if self.problems:
            details = "\n".join(f"  {p}:{n}: {r}" for p, n, r in self.problems)
            message = f"{message}\n{details}"
        super().__init__(message)


class DataIntegrityError(IngestionError):
    pass


class ConfigurationError(EpiExplainError, ValueError):
    exit_code = 2


class EstimationError(EpiExplainError):
    exit_code = 3


class TrainingError(EpiExplainError):
    exit_code = 4


class ExplanationError(EpiExplainError):
    exit_code = 5


class CapacityError(ExplanationError):
    pass


class AggregationError(EpiExplainError):
    exit_code = 6


class OutputError(EpiExplainError, OSError):
    exit_code = 6
