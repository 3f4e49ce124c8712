"""Exception hierarchy shared by every opplod module."""


class OppLoDError(Exception):
    """Base class; ``code`` is the machine-readable tag used by the CLI."""

    code = "E_GENERIC"


class InvalidInput(OppLoDError, ValueError):
    code = "E_INPUT"


class InvalidParam(OppLoDError, ValueError):
    code = "E_PARAM"


class InsufficientHistory(OppLoDError, LookupError):
    code = "E_HISTORY"


class FormatError(OppLoDError, ValueError):
    code = "E_FORMAT"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class IoError(OppLoDError, OSError):
    code = "E_IO"


class ConfigError(OppLoDError, ValueError):
    code = "E_CONFIG"


class UsageError(OppLoDError):
    code = "E_USAGE"
