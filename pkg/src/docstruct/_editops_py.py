"""Pure-Python edit-distance kernels.

Reference implementation for the optional compiled module
(docstruct._editops); the two must agree on every input. Both kernels
are bounded: once the true distance provably exceeds ``limit`` they
return ``limit + 1`` without finishing the table.

Soundness of the early exit: every alignment path crosses each DP row,
and values along a path never decrease, so a row whose minimum exceeds
the limit caps every later row too.
"""

from __future__ import annotations


def levenshtein(a: str, b: str, limit: int) -> int:
    """Edit distance between a and b, capped at limit + 1."""
    if limit < 0:
        raise ValueError("limit must be >= 0")
    m, n = len(a), len(b)
    bound = limit + 1
    if abs(m - n) > limit:
        return bound
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i] * (n + 1)
        best = i
        ac = a[i - 1]
        for j in range(1, n + 1):
            v = prev[j] + 1
            left = cur[j - 1] + 1
            if left < v:
                v = left
            diag = prev[j - 1] + (0 if ac == b[j - 1] else 1)
            if diag < v:
                v = diag
            cur[j] = v
            if v < best:
                best = v
        if best > limit:
            return bound
        prev = cur
    return prev[n] if prev[n] < bound else bound


def substring_distance(pattern: str, text: str, limit: int) -> int:
    """Minimal edit distance between pattern and any substring of text,
    capped at limit + 1.

    Substrings may start and end anywhere (the first DP row is zero and
    the minimum is taken over the last row), so an empty pattern is at
    distance 0 from any text.
    """
    if limit < 0:
        raise ValueError("limit must be >= 0")
    m, n = len(pattern), len(text)
    bound = limit + 1
    if m - n > limit:
        return bound
    prev = [0] * (n + 1)
    for i in range(1, m + 1):
        cur = [i] * (n + 1)
        best = i
        pc = pattern[i - 1]
        for j in range(1, n + 1):
            v = prev[j] + 1
            left = cur[j - 1] + 1
            if left < v:
                v = left
            diag = prev[j - 1] + (0 if pc == text[j - 1] else 1)
            if diag < v:
                v = diag
            cur[j] = v
            if v < best:
                best = v
        if best > limit:
            return bound
        prev = cur
    result = min(prev)
    return result if result < bound else bound
