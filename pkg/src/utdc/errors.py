"""Exception types raised by the toolkit.

Every error carries a short machine-readable ``code`` which the CLI prints on
stderr together with a non-zero exit status.
"""


class UtdcError(Exception):
    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InvalidArgumentError(UtdcError, ValueError):
    code = "invalid_argument"


class InsufficientSamplesError(UtdcError, ValueError):
    code = "insufficient_samples"


class LabelsRequiredError(UtdcError, ValueError):
    code = "labels_required"


class ShapeError(UtdcError, ValueError):
    code = "shape_mismatch"


class DegenerateRegressionError(UtdcError, ValueError):
    code = "degenerate_regression"


class EmptyInputError(UtdcError, ValueError):
    code = "empty_input"


# ingestion / output errors

class MissingFileError(UtdcError, FileNotFoundError):
    code = "missing_file"


class HeaderMismatchError(UtdcError, ValueError):
    code = "header_mismatch"


class NonFiniteValueError(UtdcError, ValueError):
    code = "non_finite_value"


class ParseError(UtdcError, ValueError):
    code = "parse_error"


class LabelOutOfRangeError(UtdcError, ValueError):
    code = "label_out_of_range"


class RowCountMismatchError(UtdcError, ValueError):
    code = "row_count_mismatch"


class ReportIOError(UtdcError, OSError):
    code = "io_error"
