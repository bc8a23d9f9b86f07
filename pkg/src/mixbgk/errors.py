"""Exception hierarchy shared by all mixbgk modules."""


class MixBGKError(Exception):
    """Base class for every error raised by the package."""


class InadmissibleParameters(MixBGKError, ValueError):
    """Interaction parameters violate one of the admissibility constraints."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(v.message for v in report) or "inadmissible parameters")


class DegenerateMoments(MixBGKError, ValueError):
    """Zero density or non-positive temperature where a physical state is required."""


class VacuumError(DegenerateMoments):
    """Quadrature density fell below the vacuum threshold."""


class GridSupportError(MixBGKError, ValueError):
    """A target state is not representable on the velocity grid."""


class GridMismatchError(MixBGKError, ValueError):
    """Two distributions live on different velocity grids."""


class ProjectionError(MixBGKError, RuntimeError):
    """Newton iteration for a discrete Maxwellian did not converge."""

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class StabilityError(MixBGKError, ValueError):
    """Time step violates the stability or CFL restriction of a scheme."""


class DomainError(MixBGKError, ValueError):
    """Functional evaluated outside its domain, e.g. f > 0 where g = 0."""


class ConfigError(MixBGKError, ValueError):
    """Configuration text could not be parsed or validated.

    ``diagnostics`` holds ``(line_number, message)`` pairs; line number is 0
    for problems that are not tied to one line.
    """

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = [f"line {ln}: {msg}" if ln else msg for ln, msg in self.diagnostics]
        super().__init__("\n".join(lines))
