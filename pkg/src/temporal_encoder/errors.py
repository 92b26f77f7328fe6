"""Exception hierarchy shared by all modules."""


class EncoderError(Exception):
    """Base class for every error raised by this package."""


# model / simulator
class NonSpikingError(EncoderError):
    """Net membrane current is not positive, so the threshold is never reached."""


class DegenerateBranchesError(EncoderError):
    """Adjacent branches do not have strictly increasing membrane capacitance."""


class OutOfRangeError(EncoderError):
    """A value maps outside the representable pixel range."""


class SharedWeightRequired(EncoderError):
    """Operation only defined when adjacent branches share one mirror weight."""


class MalformedTrainError(EncoderError):
    """Spike train is not sorted by (time, branch id)."""


# codec
class InvalidConfigError(EncoderError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")


class CorruptWindowError(EncoderError):
    def __init__(self, pixel_index, message):
        self.pixel_index = pixel_index
        super().__init__(f"pixel window {pixel_index}: {message}")


class EmptyReportError(EncoderError):
    pass


# power
class BadModelError(EncoderError):
    pass


# io
class IdxError(EncoderError):
    """Structured failure while parsing an IDX container."""


class BadMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class DimensionOverflowError(IdxError):
    pass


class TrailingDataError(IdxError):
    pass


class SpikeTableError(EncoderError):
    pass


class MalformedRowError(SpikeTableError):
    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MissingMetadataError(SpikeTableError):
    pass


class PgmError(EncoderError):
    pass


class ConfigError(EncoderError):
    pass


class UnknownKeyError(ConfigError):
    pass


class ConfigParseError(ConfigError):
    pass


class InvariantViolationError(ConfigError):
    pass
