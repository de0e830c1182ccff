"""Exception types shared across the package."""


class NmsLinkError(Exception):
    """Base class for all errors raised by nmslink."""


class InvalidSlope(NmsLinkError, ValueError):
    pass


class MalformedInput(NmsLinkError, ValueError):
    """Input that cannot be parsed into the domain types at all."""


class NotFound(NmsLinkError, KeyError):
    pass


class UseBaseOnly(NmsLinkError):
    """An operation defined on base links was handed a link with history."""


class Infeasible(NmsLinkError):
    """Counts for a piece admit no piece graph."""

    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality


class GluingError(NmsLinkError):
    pass


class NotInClassS(NmsLinkError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class AlgorithmFailure(NmsLinkError, AssertionError):
    """An internal invariant that the theory guarantees did not hold."""


class NoSaddle(NmsLinkError):
    pass


class AssemblyError(NmsLinkError):
    def __init__(self, message, piece=None):
        super().__init__(message)
        self.piece = piece


class NotRelated(NmsLinkError):
    """A (manifold, link) pair failed the JSJ-relatedness precondition."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class InvalidStep(NmsLinkError):
    def __init__(self, message, code, path=None):
        super().__init__(message)
        self.code = code
        self.path = path


class InvalidTarget(InvalidStep):
    def __init__(self, message, path=None):
        super().__init__(message, "invalid-target", path)


class InvalidClass(InvalidStep):
    def __init__(self, message, path=None):
        super().__init__(message, "invalid-class", path)
