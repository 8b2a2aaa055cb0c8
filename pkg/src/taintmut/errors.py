"""Exception types shared across the package."""


class TaintMutError(Exception):
    """Base class for all package errors."""


class EmptyInput(TaintMutError, ValueError):
    pass


class UnbalancedDelimiter(TaintMutError, ValueError):
    def __init__(self, position: int, message: str = "unbalanced delimiter"):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class PathBudgetExceeded(TaintMutError):
    def __init__(self, function: str, budget: int):
        super().__init__(f"more than {budget} paths in {function!r}")
        self.function = function
        self.budget = budget


class MissingDirectory(TaintMutError, FileNotFoundError):
    pass


class DuplicateRecord(TaintMutError):
    pass


class IoFailure(TaintMutError, OSError):
    pass


class SpawnFailure(TaintMutError):
    pass
