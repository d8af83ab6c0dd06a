"""Exception types shared across the package."""


class DataError(ValueError):
    """Base class for problems with input data files."""


class RaggedRowsError(DataError):
    """A delimited file whose rows have inconsistent lengths."""


class MissingColumnError(DataError):
    """A named column is absent from the table."""


class InvalidTargetError(DataError):
    """The target column cannot be used for classification (fewer than 2 classes)."""


class ParseError(DataError):
    """A cell in a numeric column failed to parse as a number."""


class InvalidVertexError(ValueError):
    """A vertex id outside the tree."""


class NoChildrenError(ValueError):
    """Children requested for a leaf vertex."""


class NonIntegralError(ValueError):
    """An assignment is fractional on a variable declared integral."""


class InvalidLabelsError(ValueError):
    """Side labels for an SVM subproblem are all on one side."""


class InvalidTreeError(ValueError):
    """A tree whose structure cannot route every input to a class vertex."""
