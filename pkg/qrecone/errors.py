from __future__ import annotations


class QreconeError(Exception):
    """Base class for every error raised by the package."""


class NotHermitianError(QreconeError, ValueError):
    def __init__(self, name: str, asymmetry: float, scale: float) -> None:
        super().__init__(
            f"{name} is not Hermitian: ||X - X*||_F = {asymmetry:.3e} exceeds tolerance at ||X||_F = {scale:.3e}"
        )
        self.asymmetry = asymmetry


class DomainError(QreconeError, ValueError):
    def __init__(self, function: str, eigenvalue: float) -> None:
        super().__init__(f"eigenvalue {eigenvalue:.6g} is outside the domain of {function}")
        self.function = function
        self.eigenvalue = eigenvalue


class ConcavityError(QreconeError, ValueError):
    pass


class MeasureError(QreconeError, RuntimeError):
    def __init__(self, message: str, max_residual: float | None = None) -> None:
        super().__init__(message)
        self.max_residual = max_residual


class InfeasiblePointError(QreconeError, ValueError):
    def __init__(self, component: str, detail: str, block: int | None = None) -> None:
        where = f"block {block}: " if block is not None else ""
        super().__init__(f"{where}{component} is not strictly interior ({detail})")
        self.component = component
        self.block = block
        self.detail = detail

    def in_block(self, block: int) -> "InfeasiblePointError":
        return InfeasiblePointError(self.component, self.detail, block=block)


class ProblemFormatError(QreconeError, ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, key: str | None = None) -> None:
        position = f"line {line}, column {column}: " if line is not None else ""
        where = f"[{key}] " if key else ""
        super().__init__(f"{position}{where}{message}")
        self.line = line
        self.column = column
        self.key = key


class NumericalFailureError(QreconeError, RuntimeError):
    """KKT factorization breakdown or a line search that cannot stay interior."""
