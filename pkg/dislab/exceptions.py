"""Exceptions raised by dislab.

Each error subclasses the builtin a caller would naturally catch, so
``except ValueError`` keeps working for code that does not know about dislab.
"""

from typing import Any, Optional


class ConfigurationError(ValueError):
    """A network, profile or dataset declaration is inconsistent."""


class EngineStateError(RuntimeError):
    """An engine call was made in the wrong order (e.g. backward before forward)."""


class NumericError(ArithmeticError):
    """A loss or gradient became non-finite.

    Attributes:
        snapshot (dict): Diagnostic state captured when the failure happened.
    """

    def __init__(self, msg: str, snapshot: Optional[dict[str, Any]] = None) -> None:
        """Create the error with an optional diagnostic snapshot.

        Args:
            msg (str): Error message.
            snapshot (dict, optional): Diagnostic state. Defaults to None.
        """
        super().__init__(msg)
        self.snapshot = snapshot or {}


class DataError(ValueError):
    """A dataset, split, task bank or representation is unusable."""


class ContainerParseError(DataError):
    """A DTB container is corrupt or truncated."""


class MetricError(DataError):
    """A disentanglement metric failed. The message starts with the metric name."""


class MissingRunsError(DataError):
    """Runs required for a report are absent.

    Attributes:
        missing (list[tuple[str, int]]): The absent (regime, seed) pairs.
    """

    def __init__(self, missing: list[tuple[str, int]]) -> None:
        """Create the error from the list of absent runs.

        Args:
            missing (list[tuple[str, int]]): The absent (regime, seed) pairs.
        """
        self.missing = sorted(missing)
        listing = ", ".join(f"({regime}, {seed})" for regime, seed in self.missing)
        super().__init__(f"Missing runs: {listing}")


class MissingArtifactError(FileNotFoundError):
    """A stage prerequisite does not exist yet."""
