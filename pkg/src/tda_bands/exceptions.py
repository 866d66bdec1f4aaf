"""Exception hierarchy shared by all modules."""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    """Malformed text input; carries the 1-based line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class EssentialClassError(ValidationError):
    """An essential (never-dying) class was found while essentials are rejected."""

    def __init__(self, dims):
        self.dims = tuple(sorted(set(dims)))
        listed = ", ".join(f"H{d}" for d in self.dims)
        super().__init__(
            f"essential classes present in dimension(s) {listed}; "
            "use essential='truncate' to replace infinite deaths with t_bound"
        )


class NoPositiveVarianceError(ValidationError):
    """Every grid node has standard deviation at or below the variance floor."""

    def __init__(self, floor):
        self.floor = floor
        super().__init__(f"no positive-variance region (all sigma_hat <= {floor:g})")
