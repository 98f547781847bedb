"""Exception hierarchy shared across the package."""


class ParetoPruneError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ParetoPruneError, ValueError):
    """Invalid network, training or experiment configuration.

    ``problems`` lists every violated field when validation collects more
    than one issue.
    """

    def __init__(self, message, problems=None):
        self.problems = list(problems or [])
        if self.problems:
            text = message + ":\n  - " + "\n  - ".join(self.problems)
        else:
            text = message
        self._message = message
        super().__init__(text)

    def __reduce__(self):
        return type(self), (self._message, self.problems)


class DimensionError(ParetoPruneError, ValueError):
    """Array shapes do not agree with the network or with each other."""


class NumericError(ParetoPruneError, ArithmeticError):
    """A NaN or infinity showed up where finite values are required."""


class DomainError(ParetoPruneError, ValueError):
    """A scalar argument lies outside its admissible range."""


class UnsupportedKindError(ParetoPruneError, ValueError):
    """The requested variant is not available for this operation."""


class DegeneratePairError(ParetoPruneError, ValueError):
    """Two objective points do not define a finite equalizing weight."""


class FormatError(ParetoPruneError, ValueError):
    """A data file is malformed; ``field`` names the offending header part."""

    def __init__(self, field, message):
        self.field = field
        self._message = message
        super().__init__(f"{field}: {message}")

    def __reduce__(self):
        return type(self), (self.field, self._message)


class ProbeError(ParetoPruneError, RuntimeError):
    """A training probe inside a search failed; ``lam`` is the weight it used."""

    def __init__(self, lam, cause):
        self.lam = lam
        self.cause = cause
        super().__init__(f"training probe at lambda={lam!r} failed: {cause}")

    def __reduce__(self):
        return type(self), (self.lam, str(self.cause))
