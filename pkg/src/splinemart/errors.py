"""Exception taxonomy shared by all modules."""


class SplineMartError(Exception):
    """Base class for all library errors."""


class CapacityError(SplineMartError):
    """A refinement search exceeded the generator's materializable depth."""


class DegenerateInputError(SplineMartError):
    """An operation that needs positive measure received a null set."""


class SearchCapError(SplineMartError):
    """An ascending search hit its configured cap before succeeding."""


class NestingError(SplineMartError):
    """Knot vectors or levels that must be nested are not."""


class DomainError(SplineMartError):
    """Evaluation point outside [0, 1]."""


class LevelError(SplineMartError):
    """Projection target level is finer than the input level."""


class PreconditionError(SplineMartError):
    """An operation's documented precondition was violated."""


class ConstructionPreconditionError(PreconditionError):
    """The divergent-sequence construction requires |V| > 0."""


class ConditioningError(SplineMartError):
    """A linear system was too ill-conditioned to solve reliably."""


class InfeasibleStoppingError(SplineMartError):
    """The stopping-time scan ran out of blocks; indicates an internal bug."""


class UnachievableSeparationError(SplineMartError):
    """Requested separation exceeds what the bush provides."""
