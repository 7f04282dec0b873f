"""Exception hierarchy.

Every error raised by the package derives from :class:`EegValError`. The
three intermediate classes map onto command-line exit codes.
"""


class EegValError(Exception):
    exit_code = 2


class ConfigError(EegValError):
    """Invalid configuration or parameter value."""

    exit_code = 1


class DataError(EegValError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class NumericalError(EegValError):
    """A numerical quantity is undefined for the given input."""

    exit_code = 3


# eeg_io
class EmptyFile(DataError):
    pass


class MalformedLine(DataError):
    def __init__(self, lineno, line):
        super().__init__(f"line {lineno}: cannot parse {line!r}")
        self.lineno = lineno
        self.line = line


class InconsistentSampleCount(DataError):
    pass


class UnknownClassPrefix(DataError):
    pass


class MissingChannel(DataError):
    def __init__(self, name):
        super().__init__(f"channel {name!r} not present in trial")
        self.name = name


class InsufficientTrials(DataError):
    def __init__(self, label, available, needed):
        super().__init__(
            f"class {label}: {available} trials available, {needed} needed")
        self.label = label
        self.available = available
        self.needed = needed


class MixedMontage(DataError):
    pass


# feature_pipeline
class AllZeroSignal(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class ZeroTotalBandEnergy(NumericalError):
    pass


class DimensionMismatch(DataError):
    pass


# learners
class SingleClassTraining(DataError):
    pass


class NonFiniteFeature(DataError):
    pass


class InvalidParam(ConfigError):
    pass


# validation_engine
class TooFewGroups(DataError):
    pass


class InnerFoldInfeasible(DataError):
    pass


# eval_stats
class EmptyInput(DataError):
    pass


class SingleClass(NumericalError):
    pass


class NoDiscordantPairs(NumericalError):
    pass


class LengthMismatch(DataError):
    pass


class DegenerateGroup(NumericalError):
    pass


class ZeroPooledSd(NumericalError):
    pass


class InvalidConfig(ConfigError):
    pass
