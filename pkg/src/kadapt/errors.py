"""Exception hierarchy shared by all kadapt modules."""


class KadaptError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(KadaptError, ValueError):
    """An argument violates an operation's precondition."""


class DegenerateVectorError(KadaptError):
    """A vector required to have nonzero norm is (numerically) zero."""


class DegenerateInputError(KadaptError):
    """Input has no variation where variation is required (e.g. constant series)."""


class DivergenceUndefinedError(KadaptError):
    """A divergence is undefined for the given pair (zero mass in the reference)."""


class EmptyClusterError(KadaptError):
    """A predicted class has no members, so cluster centroids are undefined."""


class CorpusError(KadaptError):
    """Base class for corpus loading / data problems."""


class CorpusFormatError(CorpusError):
    """A corpus file line could not be parsed; message names the line."""


class EmptyCorpusError(CorpusError):
    """A corpus file contained no documents."""


class ModelFileError(KadaptError):
    """Base class for model container problems."""


class ModelFormatError(ModelFileError):
    """Model file does not start with the expected magic bytes or is malformed."""


class ModelVersionError(ModelFileError):
    """Model file uses an unsupported format version."""


class ModelChecksumError(ModelFileError):
    """Model file is truncated or its checksum does not match."""


class ConfigError(KadaptError):
    """Experiment configuration is invalid; message carries the offending key path."""
