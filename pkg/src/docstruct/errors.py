"""Exception hierarchy shared across the toolkit.

The CLI maps DocstructError subclasses to exit status 1 (data errors);
argparse usage errors exit with status 2.
"""

from __future__ import annotations


class DocstructError(Exception):
    """Base class for all toolkit errors."""


class UnknownNodeError(DocstructError, KeyError):
    """A node id was not found in the graph."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return Exception.__str__(self)


class ValidationError(DocstructError, ValueError):
    """A graph, record, or file violated a structural invariant."""


class NotApplicableError(DocstructError):
    """An operation has no defined result for this input (skip upstream)."""


class IntegrityError(DocstructError):
    """Paired data is inconsistent (bundle/target/linearization mismatch)."""


class ConfigError(DocstructError, ValueError):
    """An unknown descriptor or invalid parameter combination."""


class UndefinedStatisticError(DocstructError):
    """A statistic is undefined for the given inputs (e.g. zero variance)."""
