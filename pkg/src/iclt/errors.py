"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """A computation failed to produce a trustworthy number."""


class EvaluationError(NumericalError):
    """An integrand returned a non-finite value."""

    def __init__(self, index: int, value: float):
        super().__init__(f"non-finite integrand value {value!r} at node {index}")
        self.index = index
        self.value = value


class ConvergenceError(NumericalError):
    """Adaptive refinement did not stabilise."""

    def __init__(self, message: str, previous: float, last: float):
        super().__init__(f"{message} (last iterates {previous!r}, {last!r})")
        self.previous = previous
        self.last = last


class EigenSolveError(NumericalError):
    """The leftmost eigenvalue could not be isolated."""

    def __init__(self, message: str, iterations: int, last: float):
        super().__init__(f"{message} after {iterations} iterations (last shift {last!r})")
        self.iterations = iterations
        self.last = last


class BracketError(NumericalError):
    """No sign change could be found around zero."""


class SimulationError(NumericalError):
    """A simulated path left the finite range."""

    def __init__(self, path: int, step: int):
        super().__init__(f"non-finite state on path {path} at step {step}")
        self.path = path
        self.step = step
