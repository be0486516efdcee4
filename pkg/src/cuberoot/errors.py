"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for configuration problems, 3 for data problems, 4 for numeric failures.
"""


class CubeRootError(Exception):
    exit_code = 4


class ConfigError(CubeRootError):
    exit_code = 2


class InvalidSpec(ConfigError):
    pass


class DataError(CubeRootError):
    exit_code = 3


class EmptySet(DataError):
    pass


class DegenerateData(DataError):
    pass


class AllZeroWeights(DataError):
    pass


class ZeroEffectiveSample(DataError):
    pass


class EmptyGrid(DataError):
    pass


class BlockTooShort(DataError):
    pass


class InvalidDensity(ConfigError):
    pass


class NumericFailure(CubeRootError):
    exit_code = 4


class FactorizationFailure(NumericFailure):
    pass


class GridTooLarge(NumericFailure):
    pass


class ExperimentAborted(NumericFailure):
    pass
