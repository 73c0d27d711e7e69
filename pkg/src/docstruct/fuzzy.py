"""Edit-distance kernel dispatch.

Prefers the compiled extension (docstruct._editops) and falls back to
the pure-Python implementation when the build was skipped. Both expose
the same two functions with identical behaviour; KERNEL records which
one is active so callers and benchmarks can report it.
"""

try:
    from . import _editops as _impl

    KERNEL = "compiled"
except ImportError:  # extension not built on this platform
    from . import _editops_py as _impl

    KERNEL = "pure"

levenshtein = _impl.levenshtein
substring_distance = _impl.substring_distance

__all__ = ["KERNEL", "levenshtein", "substring_distance"]
