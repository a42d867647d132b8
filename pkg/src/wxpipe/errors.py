"""Exception types shared across the pipeline.

Filesystem problems surface as the builtin ``FileNotFoundError`` / ``OSError``;
everything the pipeline itself can diagnose gets a class here so callers and
tests can tell failure modes apart.
"""


class WxpipeError(Exception):
    """Base class for all pipeline-specific errors."""


class UnsupportedFormatError(WxpipeError):
    """File is not a PNG or baseline JPEG."""


class CorruptImageError(WxpipeError):
    """File looks like a PNG/JPEG but its data cannot be decoded."""


class DimensionMismatchError(WxpipeError):
    """Two inputs that must share a shape or dimension do not."""


class NonFiniteFeatureError(WxpipeError):
    """A feature vector contains NaN or infinity."""


class EmptyClassError(WxpipeError):
    """A training class (positives or negatives) is empty."""


class FeatureFileError(WxpipeError):
    """Problem reading or writing a WXFEAT feature file."""


class MalformedHeaderError(FeatureFileError):
    pass


class DimensionInconsistencyError(FeatureFileError):
    pass


class DuplicateIdError(WxpipeError):
    """The same image_id appears twice (feature file or manifest)."""


class ManifestError(WxpipeError):
    """Problem parsing or validating a dataset manifest."""


class MalformedRowError(ManifestError):
    pass


class UnknownCategoryError(ManifestError):
    pass


class MissingFileError(ManifestError):
    pass


class CategoryMissingError(WxpipeError):
    """Requested category has no images in the manifest."""


class InsufficientNegativesError(WxpipeError):
    """The other categories cannot supply enough negative examples."""


class NoPositivesError(WxpipeError):
    """Ranking contains no positive items."""


class NoNegativesError(WxpipeError):
    """Ranking contains no negative items."""
