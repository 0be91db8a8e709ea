"""Exception hierarchy shared by every loopline module."""


class LooplineError(Exception):
    """Base class for all loopline errors."""


# hilbert
class DuplicateSubsystem(LooplineError, ValueError):
    pass


class UnknownSubsystem(LooplineError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyKeepSet(LooplineError, ValueError):
    pass


class EmptyCutSide(LooplineError, ValueError):
    pass


class NotUnitary(LooplineError, ValueError):
    pass


class InvalidState(LooplineError, ValueError):
    """A ket, density matrix or decomposition failed its invariants."""


# graph
class MissingPositions(LooplineError, ValueError):
    pass


class InvalidGraph(LooplineError, ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# events
class DegenerateCut(LooplineError, ValueError):
    """The cut carries no entanglement, so no event question arises."""


class NotComposite(LooplineError, ValueError):
    pass


class InconsistentRecord(LooplineError, ValueError):
    pass


class InvariantBreach(LooplineError, RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""


# transact
class NoAbsorber(LooplineError, ValueError):
    pass


class ProtocolError(LooplineError, RuntimeError):
    pass


# scenarios
class ParseError(LooplineError, ValueError):
    def __init__(self, message, path="", line=None):
        self.path = path
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(f"at {path}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class UnknownGate(ParseError):
    pass


class BadAmplitudes(ParseError):
    pass


class UnknownScenario(LooplineError, KeyError):
    def __str__(self):
        return Exception.__str__(self)
