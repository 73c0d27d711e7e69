# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
"""Compiled edit-distance kernels.

Must stay behaviourally identical to docstruct._editops_py; the test
suite cross-checks the two on random inputs whenever this module built.
"""

from libc.stdlib cimport free, malloc


def levenshtein(unicode a, unicode b, int limit):
    """Edit distance between a and b, capped at limit + 1."""
    if limit < 0:
        raise ValueError("limit must be >= 0")
    return _bounded_distance(a, b, limit, 0)


def substring_distance(unicode pattern, unicode text, int limit):
    """Minimal edit distance between pattern and any substring of text,
    capped at limit + 1."""
    if limit < 0:
        raise ValueError("limit must be >= 0")
    return _bounded_distance(pattern, text, limit, 1)


cdef int _bounded_distance(unicode a, unicode b, int limit, int substring):
    # substring=1 makes starting and ending anywhere in b free:
    # zero first row, minimum over the last row.
    cdef Py_ssize_t m = len(a)
    cdef Py_ssize_t n = len(b)
    cdef int bound = limit + 1
    if m - n > limit:
        return bound
    if not substring and n - m > limit:
        return bound
    cdef int *prev = <int *> malloc((n + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((n + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int best, v, alt
    cdef Py_UCS4 ac
    cdef int *tmp
    try:
        for j in range(n + 1):
            prev[j] = 0 if substring else <int> j
        for i in range(1, m + 1):
            cur[0] = <int> i
            best = <int> i
            ac = a[i - 1]
            for j in range(1, n + 1):
                v = prev[j] + 1
                alt = cur[j - 1] + 1
                if alt < v:
                    v = alt
                alt = prev[j - 1] + (0 if ac == b[j - 1] else 1)
                if alt < v:
                    v = alt
                cur[j] = v
                if v < best:
                    best = v
            if best > limit:
                return bound
            tmp = prev
            prev = cur
            cur = tmp
        if substring:
            best = prev[0]
            for j in range(1, n + 1):
                if prev[j] < best:
                    best = prev[j]
        else:
            best = prev[n]
        return best if best < bound else bound
    finally:
        free(prev)
        free(cur)
