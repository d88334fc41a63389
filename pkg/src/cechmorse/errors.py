class CechError(Exception):
    pass


class DegenerateInput(CechError, ValueError):
    """Raised when a vertex set is affinely dependent (no circumsphere exists)."""


class TieAmbiguity(CechError):
    """A group of simplices sharing a filtration value is not an interval.

    Carries the offending group so callers can report it.
    """

    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class CrossCheckMismatch(CechError):
    pass


class MalformedFiltration(CechError, ValueError):
    pass


class UnsupportedDimension(CechError, ValueError):
    pass
