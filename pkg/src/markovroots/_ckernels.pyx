# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled accumulation kernel for the transition-count sums."""

cimport cython
from libc.stdint cimport int64_t


def accumulate(double[:, :, :, ::1] U_T, double[:, :, ::1] U_B,
               const double[:, ::1] W, const int64_t[::1] owner,
               const int64_t[::1] frm, const int64_t[::1] to,
               const int64_t[::1] lag):
    """Add ``W[owner[e], g]`` into ``U_T[g, lag[e], frm[e], to[e]]`` and
    ``U_B[g, lag[e], frm[e]]`` for every event ``e`` in order."""
    cdef Py_ssize_t n_events = owner.shape[0]
    cdef Py_ssize_t n_grid = U_T.shape[0]
    cdef Py_ssize_t e, g, p, l, i, j
    cdef double w
    with nogil:
        for e in range(n_events):
            p = owner[e]
            l = lag[e]
            i = frm[e]
            j = to[e]
            for g in range(n_grid):
                w = W[p, g]
                if w != 0.0:
                    U_T[g, l, i, j] += w
                    U_B[g, l, i] += w
