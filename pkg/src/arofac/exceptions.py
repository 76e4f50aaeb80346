"""Error taxonomy.

Two failure families matter to callers: bad input (files, shapes, flags) and
numerical breakdown inside the pipeline. The CLI maps them to distinct exit
codes, and pipeline stages tag errors so a failure can be traced to the stage
that raised it.
"""


class ArofacError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ArofacError):
    """Malformed or inconsistent input: files, shapes, indices, config values."""


class NumericalError(ArofacError):
    """Numerical failure: non-convergence, degenerate spans, singular systems.

    The optional ``stage`` names the pipeline stage that failed.
    """

    def __init__(self, message, stage=None):
        if stage:
            message = f"[{stage}] {message}"
        super().__init__(message)
        self.stage = stage
