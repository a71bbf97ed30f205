"""Exception hierarchy.

Each family maps to a CLI exit code, so callers can tell a bad config from
bad data from a numerical breakdown without parsing messages.
"""


class PhenoclustError(Exception):
    exit_code = 1


class ConfigError(PhenoclustError, ValueError):
    exit_code = 2


class DataError(PhenoclustError, ValueError):
    exit_code = 3


class NumericalError(PhenoclustError, ArithmeticError):
    exit_code = 4
