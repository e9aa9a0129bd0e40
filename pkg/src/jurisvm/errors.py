"""Exception types shared across the toolkit."""


class JurisvmError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(JurisvmError):
    """Invalid experiment configuration, missing paths, bad lexicon coverage."""


class CorpusError(JurisvmError):
    """Unreadable source, malformed XML, empty corpus, duplicate ids."""


class DegenerateTaskError(ConfigurationError):
    """A task ended up with fewer than two retained classes."""


class InputError(JurisvmError):
    """Bad runtime input: dimension mismatch, non-finite values, empty lists."""


class StateError(JurisvmError):
    """Operation requires a trained or otherwise prepared object."""


class LeakageError(JurisvmError):
    """Train/test contamination detected by the evaluation harness."""


class IntegrityError(JurisvmError):
    """Persisted model artifacts do not match their recorded hashes."""
