"""Exception hierarchy shared by all adforge modules."""


class AdforgeError(Exception):
    """Base class for every error raised by this package."""


# raster / image errors

class TooSmall(AdforgeError):
    """Image is below the minimum size an operation supports."""


class DimensionMismatch(AdforgeError):
    """Two rasters that must agree in size do not."""


# geometry errors

class DegenerateConfiguration(AdforgeError):
    """Point correspondences contain a collinear triple."""


class PointAtInfinity(AdforgeError):
    """Projective mapping sent a point to (near-)zero homogeneous depth."""


class DegenerateHull(AdforgeError):
    """Hull input is collinear or has fewer than 3 distinct points."""


class NotConvex(AdforgeError):
    """Four points do not form a convex quadrilateral."""


# mask / localization errors

class NoRegion(AdforgeError):
    """No foreground region found."""


class RegionTooSmall(AdforgeError):
    """Largest region is below the minimum area."""


# detector errors

class MissingHeatmap(AdforgeError):
    """No heatmap file stored for the requested frame index."""


class MalformedPgm(AdforgeError):
    """PGM header is invalid or the maxval is unsupported."""


class TruncatedData(AdforgeError):
    """PGM pixel payload is shorter than the header promises."""


# tracker errors

class NoFeatures(AdforgeError):
    """No trackable features inside the region of interest."""


class TrackingLost(AdforgeError):
    """Too few inlier features survive to fit a frame-to-frame homography."""


# compositor errors

class EmptyOmega(AdforgeError):
    """Compositing region contains no pixels."""


class OmegaTouchesBorder(AdforgeError):
    """Compositing region reaches the frame border, leaving no boundary ring."""


# video / file-format errors

class UnsupportedColorSpace(AdforgeError):
    """Y4M stream is not 4:4:4."""


class MalformedHeader(AdforgeError):
    """Y4M stream header cannot be parsed."""


class TruncatedFrame(AdforgeError):
    """Y4M frame payload ended early."""


class MissingFrameIndex(AdforgeError):
    """PNG sequence has a gap."""


class UnsupportedPngType(AdforgeError):
    """PNG is not 8-bit RGB/RGBA."""


class SchemaViolation(AdforgeError):
    """Corner JSON does not match the expected schema."""


# pipeline errors

class NoBillboardFound(AdforgeError):
    """Keyframe scan exhausted the video without a detection."""


class QuadOutOfBounds(AdforgeError):
    """Synthetic scene quad leaves the safe frame margin."""
