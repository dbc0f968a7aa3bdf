"""Exception hierarchy shared by every module."""


class AgentRelError(Exception):
    """Base class for all library errors."""


class DomainError(AgentRelError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularMatrix(AgentRelError, ArithmeticError):
    pass


class NoConvergence(AgentRelError, ArithmeticError):
    pass


class NotDiagonalizable(AgentRelError, ArithmeticError):
    pass


class EmptySample(AgentRelError, ValueError):
    pass


class InvalidChain(AgentRelError, ValueError):
    """Chain construction failed a structural invariant."""


class TransienceViolated(InvalidChain):
    """rho(Q) >= 1 or (I - Q) is singular."""


class NoSuccessMass(AgentRelError, ValueError):
    pass


class SmallnessViolated(AgentRelError, ValueError):
    pass


class SubstochasticityViolated(AgentRelError, ValueError):
    pass


class ParseError(AgentRelError, ValueError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateTraceId(AgentRelError, ValueError):
    pass


class EmptyCorpus(AgentRelError, ValueError):
    pass


class TooFewPoints(AgentRelError, ValueError):
    pass


class SingleCluster(AgentRelError, ValueError):
    pass


class AlignmentError(AgentRelError, ValueError):
    pass


class NoTransitions(AgentRelError, ValueError):
    pass


class NoSuccesses(AgentRelError, ValueError):
    pass
