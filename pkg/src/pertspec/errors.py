class ValidationError(ValueError):
    """Bad input: violated precondition, unknown key, malformed file."""


class NumericalError(RuntimeError):
    pass


class QuadratureError(NumericalError):
    pass


class EigenSolverError(NumericalError):
    pass
