"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, symmetry, range)."""


class NumericalError(ArithmeticError):
    """A numerical kernel failed to converge or produced non-finite output."""


class InputError(ContractError):
    """A user-supplied file or setting could not be read; carries the location."""

    def __init__(self, message: str, path=None, row=None):
        self.path = None if path is None else str(path)
        self.row = row
        where = ""
        if self.path is not None:
            where = self.path if row is None else f"{self.path}, row {row}"
            where += ": "
        super().__init__(where + message)
