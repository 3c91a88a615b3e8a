"""Exception types shared across the package."""


class RejectedInput(ValueError):
    """An argument violates an operation's precondition."""


class StateError(RuntimeError):
    """The object is not in a state that allows the requested operation."""


class TrainingDivergence(RuntimeError):
    """A loss term became non-finite during training."""

    def __init__(self, term: str, value: float):
        value = float(value)
        super().__init__(f"non-finite loss term {term!r}: {value}")
        self.term = term
        self.value = value


class CacheConflict(RuntimeError):
    """An existing cache entry was produced by a different checkpoint."""


class DatasetLoadError(RuntimeError):
    """One or more dataset items failed to load."""

    def __init__(self, failures: list[str]):
        super().__init__("failed to load: " + ", ".join(failures))
        self.failures = list(failures)
