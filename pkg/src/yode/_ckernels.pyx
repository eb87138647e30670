# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled O(n^2) pair scans.

Mirrors ``yode._pykernels`` operation for operation (same increments, same
component summation order, same divisor table) so that both backends return
bitwise identical certificates.
"""

from libc.math cimport fabs, sqrt


cdef inline double _dist(const double[:, ::1] v, Py_ssize_t p, Py_ssize_t q, Py_ssize_t m) noexcept nogil:
    cdef double s, d
    cdef Py_ssize_t k
    if m == 1:
        return fabs(v[q, 0] - v[p, 0])
    d = v[q, 0] - v[p, 0]
    s = d * d
    for k in range(1, m):
        d = v[q, k] - v[p, k]
        s += d * d
    return sqrt(s)


def holder_scan(const double[:, ::1] values, const double[::1] lagpow, Py_ssize_t i0, Py_ssize_t i1):
    """Max of ``|v_q - v_p| / lagpow[q - p]`` over ``i0 <= p < q <= i1``.

    Returns ``(best, p, q)``; ties go to the lexicographically smallest pair.
    """
    cdef Py_ssize_t m = values.shape[1]
    cdef Py_ssize_t p, q, bp = i0, bq = i0 + 1
    cdef double best = -1.0, r
    with nogil:
        for p in range(i0, i1):
            for q in range(p + 1, i1 + 1):
                r = _dist(values, p, q, m) / lagpow[q - p]
                if r > best:
                    best = r
                    bp = p
                    bq = q
    return best, bp, bq


def lift_scan(const double[:, ::1] values, const double[::1] lagpow, Py_ssize_t a, Py_ssize_t b):
    """Max over ``a <= s < t <= b`` of ``max_{s<=x<=t} |v_x - v_s| / lagpow[t - s]``.

    This is the Hölder quotient of the frozen-path map measured in sup norm.
    """
    cdef Py_ssize_t m = values.shape[1]
    cdef Py_ssize_t s, t, bs = a, bt = a + 1
    cdef double best = -1.0, run, d, r
    with nogil:
        for s in range(a, b):
            run = 0.0
            for t in range(s + 1, b + 1):
                d = _dist(values, s, t, m)
                if d > run:
                    run = d
                r = run / lagpow[t - s]
                if r > best:
                    best = r
                    bs = s
                    bt = t
    return best, bs, bt
