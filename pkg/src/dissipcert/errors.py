"""Exception types shared across the toolkit."""


class DissipcertError(Exception):
    """Base class for all toolkit errors."""


class UnknownTransfer(DissipcertError):
    """Requested transfer function name is not a built-in."""


class DomainError(DissipcertError):
    """Argument outside the inverse-slope map's domain (0, s0]."""

    def __init__(self, y, s0, message=None):
        self.y = float(y)
        self.s0 = float(s0)
        super().__init__(message or f"psi argument {y!r} outside (0, {s0!r}]")


class PoleError(DissipcertError):
    """Secular function evaluated at one of its poles."""


class DegenerateCurvature(DissipcertError):
    """Curvature diagonal has a zero entry; g'(0) is undefined."""


class DegenerateQ(DissipcertError):
    """Two ratios l_j/c_j coincide; the problem is refused, not merged."""


class ConvergenceFailure(DissipcertError):
    """An iteration hit its cap without meeting its stopping criterion."""

    def __init__(self, message, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class TheoremViolationError(DissipcertError):
    """Internal structural guarantee broke; suite-fatal diagnostic."""


class UnboundedDomain(DissipcertError):
    """Polytope is unbounded along some coordinate axis."""


class UnsupportedDimension(DissipcertError):
    """Brute-force search is capped at n <= 4."""
