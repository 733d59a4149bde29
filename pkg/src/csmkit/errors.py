"""Error type shared by every csmkit module.

Each failure carries a stable upper-case ``code`` so callers (and the CLI)
can branch on the kind of failure without parsing messages.
"""

# Dataset ingestion / format failures (CLI exit code 2)
MALFORMED_RECORD = "MALFORMED_RECORD"
ALIGNMENT_MISMATCH = "ALIGNMENT_MISMATCH"
NONFINITE_COORDINATE = "NONFINITE_COORDINATE"
DUPLICATE_SAMPLE_ID = "DUPLICATE_SAMPLE_ID"
CONFIG_ERROR = "CONFIG_ERROR"

# Domain failures (CLI exit code 1)
EMPTY_CHARACTER = "EMPTY_CHARACTER"
ALREADY_ABSOLUTE = "ALREADY_ABSOLUTE"
DELTA_INPUT = "DELTA_INPUT"
DEGENERATE_FIT = "DEGENERATE_FIT"
TOO_FEW_POINTS = "TOO_FEW_POINTS"
ZERO_HEIGHT = "ZERO_HEIGHT"
INVALID_ARGUMENT = "INVALID_ARGUMENT"
MISSING_NEXT_PEN_MOVE = "MISSING_NEXT_PEN_MOVE"
COMPONENT_UNDEFINED = "COMPONENT_UNDEFINED"
EMPTY_SEQUENCE = "EMPTY_SEQUENCE"
LENGTH_MISMATCH = "LENGTH_MISMATCH"
EMPTY_BOUNDARY_SET = "EMPTY_BOUNDARY_SET"
UNPAIRED_SAMPLE = "UNPAIRED_SAMPLE"
TEXT_MISMATCH = "TEXT_MISMATCH"

FORMAT_CODES = frozenset(
    {MALFORMED_RECORD, ALIGNMENT_MISMATCH, NONFINITE_COORDINATE, DUPLICATE_SAMPLE_ID, CONFIG_ERROR}
)


class CsmError(ValueError):
    """A failure with a machine-readable code.

    Attributes:
        code: One of the module-level code constants.
        line: 1-based input line number when the failure came from a file.
    """

    def __init__(self, code: str, message: str = "", line: int | None = None):
        self.code = code
        self.line = line
        text = f"{code}: {message}" if message else code
        if line is not None:
            text = f"line {line}: {text}"
        super().__init__(text)
