"""Exception hierarchy shared across the toolkit.

CLI exit-code mapping: ValidationError and ParseError -> 1,
NumericalError -> 2, OSError -> 3 (see ``kitamp.cli``).
"""


class KitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(KitError):
    """A spec object or config violates its invariants.

    ``fields`` lists every failing field so a config can be fixed in
    one pass rather than one error at a time.
    """

    def __init__(self, message, fields=None):
        super().__init__(message)
        self.fields = list(fields) if fields else []


class DomainError(KitError):
    """An operation input lies outside its physical validity range."""


class OperatingPointError(DomainError):
    """Bias/pump currents outside the device operating regime."""


class GridAlignmentError(KitError):
    """Two frequency-indexed objects do not share the same grid."""


class StopbandError(DomainError):
    """A requested frequency falls inside a dispersion stopband."""


class PreconditionError(KitError):
    """A structural precondition (e.g. unimodular ABCD) is not met."""


class NumericalError(KitError):
    """A numerical procedure failed or produced an invalid result."""


class ConversionError(NumericalError):
    """Singular matrix conversion; carries the offending grid index."""

    def __init__(self, message, index=None, frequency=None):
        super().__init__(message)
        self.index = index
        self.frequency = frequency


class IntegrationError(NumericalError):
    """ODE integration did not reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ChainError(KitError):
    """A readout chain is malformed."""


class ProfileShapeError(KitError):
    """A gain profile lacks the shape an analysis requires."""


class FitError(NumericalError):
    """All fit starts failed; carries per-start diagnostics."""

    def __init__(self, message, starts=None):
        super().__init__(message)
        self.starts = starts or []


class ParseError(KitError):
    """Malformed input file; carries file name and line number."""

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line
