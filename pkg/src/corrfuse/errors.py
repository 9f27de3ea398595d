"""Exception taxonomy mapped to CLI exit codes."""


class UsageError(Exception):
    """Bad flags, unknown config keys, invalid values (exit code 2)."""


class DataError(Exception):
    """Missing files, line-count mismatches, malformed formats (exit code 3)."""


class NumericError(Exception):
    """Non-finite parameters or scores during optimization (exit code 4)."""
