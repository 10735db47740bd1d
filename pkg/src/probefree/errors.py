"""Exception types raised across the package."""


class OrthogonalSelection(ValueError):
    """Pre- and post-selection are (numerically) orthogonal; weak values diverge."""


class NoFringe(ValueError):
    """Fringe samples carry no resolvable first harmonic."""


class RegimeError(ValueError):
    """Inputs fall outside the regime where an expansion or grid is valid."""


class EnvelopeWarning(UserWarning):
    """A small transformation was evaluated outside its documented |theta| <= 1 envelope."""
