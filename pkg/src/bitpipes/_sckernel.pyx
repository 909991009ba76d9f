# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled successive-cancellation decoding kernel.

Recursive in-place SC over a scratch buffer; the pure-Python twin lives in
bitpipes._scfallback and must stay decision-identical.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, exp, log1p


cdef inline double _f_minsum(double a, double b) nogil:
    cdef double s = 1.0
    if a < 0:
        s = -s
        a = -a
    if b < 0:
        s = -s
        b = -b
    return s * (a if a < b else b)


cdef inline double _f_exact(double a, double b) nogil:
    # min-sum plus the exact log-domain correction terms
    return _f_minsum(a, b) + log1p(exp(-fabs(a + b))) - log1p(exp(-fabs(a - b)))


cdef void _sc(const double* llr, unsigned char* u, unsigned char* x,
              const unsigned char* frozen, double* work,
              Py_ssize_t n, bint minsum) nogil:
    cdef Py_ssize_t h, j
    if n == 1:
        if frozen[0]:
            u[0] = 0
        elif llr[0] < 0:
            u[0] = 1
        else:
            u[0] = 0
        x[0] = u[0]
        return
    h = n // 2
    if minsum:
        for j in range(h):
            work[j] = _f_minsum(llr[j], llr[j + h])
    else:
        for j in range(h):
            work[j] = _f_exact(llr[j], llr[j + h])
    _sc(work, u, x, frozen, work + h, h, minsum)
    for j in range(h):
        work[j] = llr[j + h] + (1.0 - 2.0 * x[j]) * llr[j]
    _sc(work, u + h, x + h, frozen + h, work + h, h, minsum)
    for j in range(h):
        x[j] = x[j] ^ x[j + h]


def sc_decode_batch(double[:, ::1] llrs, const unsigned char[::1] frozen,
                    bint minsum=True):
    """Decode each row of llrs; returns the (B, n) matrix of u decisions."""
    cdef Py_ssize_t batch = llrs.shape[0]
    cdef Py_ssize_t n = llrs.shape[1]
    if n & (n - 1):
        raise ValueError(f"block length must be a power of two, got {n}")
    u_arr = np.zeros((batch, n), dtype=np.uint8)
    x_arr = np.zeros(n, dtype=np.uint8)
    work_arr = np.empty(n, dtype=np.float64)
    cdef unsigned char[:, ::1] u = u_arr
    cdef unsigned char[::1] x = x_arr
    cdef double[::1] work = work_arr
    cdef Py_ssize_t b
    with nogil:
        for b in range(batch):
            _sc(&llrs[b, 0], &u[b, 0], &x[0], &frozen[0], &work[0], n, minsum)
    return u_arr
