"""Exception hierarchy.

Every precondition failure raised by the library derives from
:class:`GrassbundleError`, which is also a :class:`ValueError`.
"""


class GrassbundleError(ValueError):
    """Base class for all library errors."""


class RankDeficient(GrassbundleError):
    pass


class NotProper(GrassbundleError):
    """Subspace is zero or the whole space."""


class IllConditioned(GrassbundleError):
    pass


class ComplementRequired(GrassbundleError):
    """Two subspaces were required to be complementary and are not."""


class CoordOutsideChart(GrassbundleError):
    pass


class FiberMismatch(GrassbundleError):
    pass


class RankMismatch(GrassbundleError):
    pass


class NotIdempotent(GrassbundleError):
    pass


class NotInvolution(GrassbundleError):
    pass


class FieldMismatch(GrassbundleError):
    pass
