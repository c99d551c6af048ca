"""Exception hierarchy shared by all polardet modules."""


class PolarDetError(ValueError):
    """Base class for every data error raised by polardet."""


class ZeroIntensityError(PolarDetError):
    """DOP requested for a pixel with no light (S0 == 0)."""


class NonPhysicalError(PolarDetError):
    """Polarized intensity exceeds total intensity beyond the clamp tolerance."""


class OddDimensionsError(PolarDetError):
    """A DoFP raw frame must have even width and height."""


class MissingChannelError(PolarDetError):
    """An image lacks a plane required by the requested channel combination."""


class ZeroInstancesError(PolarDetError):
    """Weighted mAP requested with no ground-truth instances at all."""


class BaselinePerfectError(PolarDetError):
    """Error-rate evolution is undefined against a baseline AP of 1."""


class SchemaError(PolarDetError):
    """An input file does not follow its documented JSON schema.

    ``problems`` holds one human-readable message per offending record,
    each prefixed with its line number in the source file.
    """

    def __init__(self, message, problems=()):
        super().__init__(message)
        self.problems = list(problems)
