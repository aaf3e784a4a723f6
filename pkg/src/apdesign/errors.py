"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to.
"""


class APDesignError(Exception):
    exit_code = 1


class ParseError(APDesignError):
    exit_code = 2


class FeasibilityError(APDesignError):
    exit_code = 3


class DuplicatePartner(FeasibilityError):
    def __init__(self, agent, message=None):
        self.agent = agent
        super().__init__(message or f"agent {agent} is matched more than once")


class CapacityExceeded(FeasibilityError):
    def __init__(self, supplier, count, capacity):
        self.agent = supplier
        super().__init__(
            f"supplier {supplier} is matched {count} times (capacity {capacity})"
        )


class DemandReused(FeasibilityError):
    def __init__(self, demand):
        self.agent = demand
        super().__init__(f"demand {demand} is matched more than once")


class UnknownAgent(FeasibilityError):
    def __init__(self, agent):
        self.agent = agent
        super().__init__(f"agent {agent} is not part of the population")


class DegreeViolation(FeasibilityError):
    def __init__(self, agent, message=None):
        self.agent = agent
        super().__init__(message or f"agent {agent} has two disagreement edges with the same label")


class ModeMismatch(FeasibilityError):
    pass


class PopulationMismatch(FeasibilityError):
    pass


class UnbalancedVertex(FeasibilityError):
    def __init__(self, vertex, out_degree, in_degree):
        self.vertex = vertex
        super().__init__(f"vertex {vertex} is unbalanced: out={out_degree}, in={in_degree}")


class AlignmentError(APDesignError):
    exit_code = 4


class ShapeMismatch(AlignmentError):
    pass


class InfeasibleAssignment(AlignmentError):
    pass


class MissingOutcome(APDesignError, KeyError):
    exit_code = 5

    def __init__(self, edge):
        self.edge = edge
        super().__init__(f"no outcome recorded for edge {edge}")

    def __str__(self):
        return self.args[0]


class InvalidP(APDesignError, ValueError):
    exit_code = 2


class InvalidK(APDesignError, ValueError):
    exit_code = 2


class InvalidAlpha(APDesignError, ValueError):
    exit_code = 2


class IndexOutOfRange(APDesignError, IndexError):
    pass


class ComponentError(APDesignError, ValueError):
    exit_code = 2


class TooLarge(APDesignError, ValueError):
    pass


class TooFewSamples(APDesignError, ValueError):
    pass
