"""Exception hierarchy shared by every module.

The CLI maps :class:`UsageError` to exit code 1 and :class:`DataError`
to exit code 2.
"""


class HierSatireError(Exception):
    pass


class UsageError(HierSatireError):
    pass


class DataError(HierSatireError):
    pass


class ConfigError(HierSatireError):
    """Variant/feature mismatch or an invalid model configuration."""


class CheckpointError(DataError):
    pass


class FeatureError(DataError):
    pass
