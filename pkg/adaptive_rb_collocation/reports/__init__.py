"""Reference moments, error measures and CSV result tables."""

from .moments import MomentErrors, ReferenceMoments, RunningMoments, moment_errors, qmc_reference
from .tables import ErrorRow, format_label, write_directions, write_errors, write_terms

__all__ = [
    "ErrorRow",
    "MomentErrors",
    "ReferenceMoments",
    "RunningMoments",
    "format_label",
    "moment_errors",
    "qmc_reference",
    "write_directions",
    "write_errors",
    "write_terms",
]
