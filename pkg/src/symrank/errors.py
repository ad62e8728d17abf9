"""Semantic exception hierarchy shared by all symrank modules."""


class SymrankError(ValueError):
    """Base class for all contract violations raised by this package."""


# -- dataset construction ------------------------------------------------

class TiesInResponse(SymrankError):
    """The response vector contains exact duplicates."""


class DimensionMismatch(SymrankError):
    """Array shapes disagree with the declared layout."""


class NonFiniteData(SymrankError):
    """An input array contains NaN or infinite entries."""


# -- rank statistics -----------------------------------------------------

class LengthMismatch(SymrankError):
    """Paired vectors have different lengths."""


class TiesPresent(SymrankError):
    """A statistic that requires tie-free input received ties."""


class ZeroVariance(SymrankError):
    """A correlation was requested for a constant vector."""


# -- partitions ----------------------------------------------------------

class EmptySide(SymrankError):
    """A 2-partition side is empty."""


class SizeOutOfRange(SymrankError):
    """Requested group size violates the operation's size hypothesis."""


class TooLarge(SymrankError):
    """Input exceeds the combinatorial guard for exhaustive search."""


class TooSmall(SymrankError):
    """Input is below the minimum size for this operation."""


class MembershipViolation(SymrankError):
    """A swap index does not belong to the stated partition side."""


# -- trees ---------------------------------------------------------------

class Unsplittable(SymrankError):
    """Node admits no split (constant response or no admissible threshold)."""


class InadmissibleRule(SymrankError):
    """A split rule references an invalid coordinate or threshold."""


class ColumnMismatch(SymrankError):
    """Prediction input width differs from the tree's training width."""


# -- piecewise monotone transforms ----------------------------------------

class DomainMismatch(SymrankError):
    """Two transforms are defined on different domains."""


class NotMonotone(SymrankError):
    """A declared-monotone segment failed the construction spot check."""


class MergeableSegments(SymrankError):
    """Adjacent segments continue monotonically and should be one segment."""


class IntervalSpansBreakpoint(SymrankError):
    """The query interval crosses a segment boundary."""


class NotRefinedInterval(SymrankError):
    """The interval is not a member of the refined partition."""


class CaseThreePresent(SymrankError):
    """Both transforms have a pre-image on some refined interval."""


class UnboundedTransform(SymrankError):
    """sup/inf of a transform is not finite on its domain."""


# -- symbolic feature generation ------------------------------------------

class PartialOperatorDomain(SymrankError):
    """A partial operator (e.g. division) left its domain on the data."""


# -- selection evaluation --------------------------------------------------

class KTooLarge(SymrankError):
    """Requested selection size exceeds the number of features."""


class NoPositives(SymrankError):
    """Ground truth contains no positive labels."""


class SizeMismatch(SymrankError):
    """A repeat selection does not have the declared size."""
