"""Exception hierarchy.

Every error raised on purpose by the package derives from DocSourceError, so the
CLI can map it to the "data error" exit code in one place.
"""


class DocSourceError(Exception):
    pass


# imagecore
class ConstantImage(DocSourceError):
    pass


class UnsupportedFormat(DocSourceError):
    pass


class CorruptData(DocSourceError):
    pass


# segmentation
class BadPatchSize(DocSourceError, ValueError):
    pass


# nnengine
class BadConfig(DocSourceError, ValueError):
    pass


class ShapeMismatch(DocSourceError, ValueError):
    pass


class DegenerateBatch(DocSourceError, ValueError):
    pass


class EmptyDataset(DocSourceError):
    pass


class BadFormat(DocSourceError):
    pass


class VersionMismatch(BadFormat):
    pass


# classify
class NoComponents(DocSourceError):
    pass


# evalharness
class BadSplitSpec(DocSourceError, ValueError):
    pass


class ManifestError(DocSourceError):
    pass


class LabelOutOfRange(DocSourceError, ValueError):
    pass


# synthdata
class LayoutOverflow(DocSourceError):
    pass


class UpscaleRefused(DocSourceError, ValueError):
    pass
