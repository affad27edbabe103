"""Exception types shared across the pipeline.

The CLI maps these onto its exit codes: config problems -> 1, data
problems -> 2, missing upstream artifacts or annotation gates -> 3.
"""

from __future__ import annotations


class SchemaError(ValueError):
    """An input line violates the ingestion schema."""

    def __init__(self, line_number: int, field: str, message: str):
        self.line_number = line_number
        self.field = field
        super().__init__(f"line {line_number}: field '{field}': {message}")


class DegenerateCorpusError(ValueError):
    """The corpus is empty or has no usable tokens/biterms."""


class AlignmentError(ValueError):
    """Two label sequences that must align item-by-item do not."""


class CoverageError(ValueError):
    """Items that require annotations have none."""

    def __init__(self, missing: list[str], what: str = "items"):
        self.missing = list(missing)
        super().__init__(f"unannotated {what}: {', '.join(self.missing)}")


class DegenerateGroupError(ValueError):
    """A per-class summary was requested for an empty class."""


class UndefinedTestError(ValueError):
    """A significance test is undefined for the given samples."""


class DegenerateTrainingError(ValueError):
    """Training data does not contain both classes or enough examples."""


class SplitRedrawError(RuntimeError):
    """A train/test split could not produce both classes after redraws."""


class ConfigError(ValueError):
    """Invalid pipeline configuration, with per-field diagnostics."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DependencyGateError(RuntimeError):
    """A required upstream artifact or human annotation pass is missing."""

    def __init__(self, message: str, required: str):
        self.required = required
        super().__init__(message)
