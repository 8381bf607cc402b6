"""
Errors raised by the kernels, readers and commands.

Management commands map these onto exit codes, the HTTP views onto
400 responses.
"""


class PanopticKernelsError(Exception):
    pass


class DimensionError(PanopticKernelsError, ValueError):
    """ shapes disagree, or a map is not divisible by a scale factor """


class DomainError(PanopticKernelsError, ValueError):
    """ a value lies outside its permitted range """


class KernelIndexError(PanopticKernelsError, IndexError):
    pass


class RoutingError(PanopticKernelsError):
    """ recorded alignment routing does not belong to the supplied maps """


class FormatError(PanopticKernelsError):
    """
    A file could not be decoded. The message always carries the path and
    the offset or row where decoding stopped.
    """

    def __init__(self, message, path=None, location=None):
        self.path = path
        self.location = location
        parts = [message]
        if path is not None:
            parts.append(f"file {path}")
        if location is not None:
            parts.append(location)
        super().__init__(", ".join(parts))


class CheckFailure(PanopticKernelsError):
    """ a verification (gradient, checksum) did not pass """
