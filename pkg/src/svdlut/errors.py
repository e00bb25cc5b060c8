"""Exception hierarchy shared by all svdlut modules."""


class SvdLutError(Exception):
    """Base class for every error raised by this package."""


# -- value/domain validation ------------------------------------------------

class DimensionMismatch(SvdLutError):
    """Declared dimensions disagree with the data they describe."""


class NonFiniteValue(SvdLutError):
    """A sample, table entry, weight or parameter is NaN or infinite."""


class BadHyperparameter(SvdLutError):
    """A hyperparameter is outside its valid range."""


class BadVertexCount(SvdLutError):
    """A lookup table axis has fewer than two vertices."""


class DegenerateImage(SvdLutError):
    """Spatial coordinates are undefined for images narrower than 2 px."""


class BadGridCount(SvdLutError):
    """The grid count does not divide evenly into the three color channels."""


# -- decomposition ----------------------------------------------------------

class NoConvergence(SvdLutError):
    """Jacobi sweeps hit the iteration cap before the off-diagonals died."""


class BadRank(SvdLutError):
    """Requested rank is outside 1..full rank."""


# -- model parameters and serialization -------------------------------------

class BadParams(SvdLutError):
    """A parameter set is missing tensors, has extras, or has wrong shapes."""


class BadMagic(SvdLutError):
    """A file does not start with the expected format identifier."""


class UnsupportedVersion(SvdLutError):
    """The file format version is newer than this reader understands."""


class TruncatedFile(SvdLutError):
    """The file ended before the declared payload was complete."""


class MalformedFile(SvdLutError):
    """A file parses as the right format but violates its structure."""


class ShapeMismatch(SvdLutError):
    """A stored tensor's shape disagrees with the declared hyperparameters."""


class BadMaxval(SvdLutError):
    """A PNM maxval other than 255 or 65535."""


# -- benchmarking -----------------------------------------------------------

class BadResolution(SvdLutError):
    """A resolution label that is neither WxH nor a known alias."""
