"""Exception types shared across the package.

Every numerical failure mode raises a subclass of :class:`HamlabError`, so
callers (in particular the experiment runner) can separate "the computation
itself broke" from ordinary usage errors, which raise ``ValueError``.
"""


class HamlabError(Exception):
    """Base class for numerical failures raised by this package."""


class EvaluationError(HamlabError):
    """An observable or Hamiltonian returned a non-finite value."""

    def __init__(self, name, detail=""):
        self.name = name
        msg = f"evaluation of observable '{name}' produced a non-finite value"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class CompletenessError(HamlabError):
    """Momentum recovery failed because the observable set is not complete.

    Carries the :class:`~hamlab.canonical.CompletenessReport` describing the
    rank-deficient Jacobian at the failing point.
    """

    def __init__(self, report, detail=""):
        self.report = report
        msg = "observable set is not complete at this point"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DivergenceError(HamlabError):
    """Newton iteration failed to converge within the iteration budget."""

    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(final max residual {residual:.3e})"
        )


class ConvergenceError(HamlabError):
    """An implicit solve (fixed-point or adaptive stepper) did not converge."""


class DomainExitError(HamlabError):
    """A wave-equation evolution would push data past the truncated domain."""


class ScalingError(HamlabError):
    """High-order moment quadrature overflowed; nondimensionalize the field."""


class InvalidIntegralsError(HamlabError):
    """Recorded integral values are inconsistent (e.g. a negative square)."""


class SingularPointError(HamlabError):
    """Triangular momentum recovery hit a point where it is undefined."""


class BlowUpError(HamlabError):
    """Time stepping produced non-finite values.

    ``last_time`` is the time of the last finite state.
    """

    def __init__(self, last_time, step):
        self.last_time = last_time
        self.step = step
        super().__init__(
            f"solution blew up at step {step}; last stable time t={last_time:.6g}"
        )


class ResolutionError(HamlabError):
    """The requested mode count is not resolvable on the given grid."""


class DecayError(HamlabError):
    """Field data does not decay below tolerance at the domain edges."""
