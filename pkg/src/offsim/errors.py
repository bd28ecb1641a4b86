"""Exception types raised across the package.

Each file format, the graph loader, the device layer and the metrics
functions signal well-defined failure classes so callers can tell bad
input apart from bugs. Everything derives from OffsimError.
"""


class OffsimError(Exception):
    """Base class for all package-specific errors."""


# --- tensor files ---

class TensorFileError(OffsimError):
    """A tensor file does not match the on-disk format."""


class MalformedHeaderError(TensorFileError):
    """Bad magic, unsupported version, or a nonzero reserved field."""


class TruncatedPayloadError(TensorFileError):
    """Payload holds fewer values than the declared dimensions require."""


class ShapeOverflowError(TensorFileError):
    """Declared dimensions multiply out beyond the platform index range."""


# --- label files ---

class LabelFileError(OffsimError):
    """A label file does not match the expected line format."""


class MalformedLineError(LabelFileError):
    pass


class DuplicateSampleError(LabelFileError):
    pass


class NonNumericClassError(LabelFileError):
    pass


# --- network manifests ---

class ManifestError(OffsimError):
    """A network manifest or its weight blob is invalid."""


class SchemaViolationError(ManifestError):
    pass


class UnknownLayerKindError(ManifestError):
    pass


class DanglingLayerRefError(ManifestError):
    pass


class WeightBlobOverrunError(ManifestError):
    pass


class CyclicGraphError(ManifestError):
    pass


# --- shared shape / execution errors ---

class ShapeMismatchError(OffsimError):
    """A tensor shape is incompatible with what the consumer requires."""


class NonSoftmaxOutputError(OffsimError):
    """Forward inference requires the graph to end in a softmax layer."""


# --- devices ---

class DeviceError(OffsimError):
    pass


class DeviceClosedError(DeviceError):
    """The handle was closed; no further tensors can be loaded."""


class NoJobInFlightError(DeviceError):
    """get_result called with nothing loaded and unretrieved."""


# --- metrics ---

class MetricsError(OffsimError, ValueError):
    """Invalid input to a metrics function."""


class ZeroDurationError(MetricsError):
    pass


class NonPositiveTdpError(MetricsError):
    pass


class LengthMismatchError(MetricsError):
    pass


class EmptyPredictionError(MetricsError):
    pass


class NoSurvivingSamplesError(MetricsError):
    pass


class NonPositiveBaselineError(MetricsError):
    pass


class DegenerateFitError(MetricsError):
    pass


class EmptyInputError(MetricsError):
    pass


# --- command line ---

class ConfigError(OffsimError):
    """The run configuration (file or flags) is unusable."""


class DatasetEmptyError(OffsimError):
    """The dataset directory holds no sample tensors."""


class MissingLabelError(OffsimError):
    """A dataset sample has no entry in the label file."""
