"""Semantic exception hierarchy shared by all sepcap modules."""


class SepcapError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(SepcapError):
    """Operands live in different ambient dimensions."""


class EmptySetError(SepcapError):
    """A nonempty point set was required."""


class EstimatorError(SepcapError):
    """Monte Carlo estimator got an unusable sample budget."""


class DegenerateConeError(SepcapError):
    """All points coincide, so no difference direction exists."""


class NotSeparatedError(SepcapError):
    """Sets were required to be delta-separated with delta > 0."""


class EmptyComponentError(SepcapError):
    """A covering component contains no data points."""


class HypothesisViolatedError(SepcapError):
    """An input falls outside a formula's stated hypothesis range."""


class OverflowBoundError(SepcapError):
    """A bound formula left the double-precision range; no silent saturation."""


class DegenerateNarrownessError(SepcapError):
    """Narrowness parameter epsilon = 1 makes the bound formula degenerate."""


class NoSeparatingNeuronError(SepcapError):
    """Some positive-class point is t-separated from the negative class by no neuron."""


class EmptyIndicatorError(SepcapError):
    """The layer image has no zero coordinate, so the indicator direction is empty."""


class InfeasibleScenarioError(SepcapError):
    """Scenario constraints cannot be met (bad geometry or rejection budget spent)."""


class ConfigError(SepcapError):
    """Experiment configuration is missing fields or holds invalid values."""
