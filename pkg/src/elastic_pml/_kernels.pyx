# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SBP 4-2 stencil kernels.

Arrays are viewed as ``(outer, n, inner)`` with the derivative taken along the
middle axis; ``inner == 1`` is the contiguous last-axis case.
"""

from cython.parallel cimport prange

cdef double B01 = 59.0 / 34.0, B02 = -4.0 / 17.0, B03 = -3.0 / 34.0
cdef double B12 = 0.5
cdef double B20 = 4.0 / 43.0, B21 = -59.0 / 86.0, B23 = 59.0 / 86.0, B24 = -4.0 / 43.0
cdef double B30 = 3.0 / 98.0, B32 = -59.0 / 98.0, B34 = 32.0 / 49.0, B35 = -4.0 / 49.0


cdef inline void _edges(const double* u, double* o, Py_ssize_t n, Py_ssize_t s, double ih) noexcept nogil:
    # rows in difference form (each row sums to zero), so constants give exactly 0
    cdef Py_ssize_t m = n - 1
    cdef double c
    c = u[0]
    o[0] = (B01 * (u[s] - c) + B02 * (u[2 * s] - c) + B03 * (u[3 * s] - c)) * ih
    o[s] = B12 * (u[2 * s] - c) * ih
    c = u[2 * s]
    o[2 * s] = (B20 * (u[0] - c) + B21 * (u[s] - c) + B23 * (u[3 * s] - c) + B24 * (u[4 * s] - c)) * ih
    c = u[3 * s]
    o[3 * s] = (B30 * (u[0] - c) + B32 * (u[2 * s] - c) + B34 * (u[4 * s] - c) + B35 * (u[5 * s] - c)) * ih
    c = u[m * s]
    o[m * s] = -(B01 * (u[(m - 1) * s] - c) + B02 * (u[(m - 2) * s] - c) + B03 * (u[(m - 3) * s] - c)) * ih
    o[(m - 1) * s] = -B12 * (u[(m - 2) * s] - c) * ih
    c = u[(m - 2) * s]
    o[(m - 2) * s] = -(B20 * (u[m * s] - c) + B21 * (u[(m - 1) * s] - c) + B23 * (u[(m - 3) * s] - c)
                       + B24 * (u[(m - 4) * s] - c)) * ih
    c = u[(m - 3) * s]
    o[(m - 3) * s] = -(B30 * (u[m * s] - c) + B32 * (u[(m - 2) * s] - c) + B34 * (u[(m - 4) * s] - c)
                       + B35 * (u[(m - 5) * s] - c)) * ih


cdef inline void _line(const double* u, double* o, Py_ssize_t n, Py_ssize_t s,
                       double ih, double i12h, bint periodic) noexcept nogil:
    cdef Py_ssize_t i
    if periodic:
        for i in range(n):
            o[i * s] = (8.0 * (u[((i + 1) % n) * s] - u[((i - 1 + n) % n) * s])
                        - (u[((i + 2) % n) * s] - u[((i - 2 + n) % n) * s])) * i12h
        return
    for i in range(4, n - 4):
        o[i * s] = (8.0 * (u[(i + 1) * s] - u[(i - 1) * s]) - (u[(i + 2) * s] - u[(i - 2) * s])) * i12h
    _edges(u, o, n, s, ih)


cdef inline void _plane(const double* u, double* o, Py_ssize_t n, Py_ssize_t inner,
                        double ih, double i12h, bint periodic) noexcept nogil:
    # derivative along the slow axis of an (n, inner) block; inner loop is contiguous
    cdef Py_ssize_t i, k, im2, im1, ip1, ip2
    if periodic:
        for i in range(n):
            im2 = ((i - 2 + n) % n) * inner
            im1 = ((i - 1 + n) % n) * inner
            ip1 = ((i + 1) % n) * inner
            ip2 = ((i + 2) % n) * inner
            for k in range(inner):
                o[i * inner + k] = (8.0 * (u[ip1 + k] - u[im1 + k]) - (u[ip2 + k] - u[im2 + k])) * i12h
        return
    for i in range(4, n - 4):
        for k in range(inner):
            o[i * inner + k] = (8.0 * (u[(i + 1) * inner + k] - u[(i - 1) * inner + k])
                                - (u[(i + 2) * inner + k] - u[(i - 2) * inner + k])) * i12h
    for k in range(inner):
        _edges(u + k, o + k, n, inner, ih)


def d1_blocks(const double[:, :, ::1] u, double[:, :, ::1] out, double h, bint periodic, int nthreads=1):
    """Apply D1 along axis 1 of a contiguous ``(outer, n, inner)`` array."""
    cdef Py_ssize_t outer = u.shape[0], n = u.shape[1], inner = u.shape[2]
    cdef Py_ssize_t b, k
    cdef double ih = 1.0 / h
    cdef double i12h = 1.0 / (12.0 * h)
    if inner == 1:
        for b in prange(outer, nogil=True, num_threads=nthreads, schedule="static"):
            _line(&u[b, 0, 0], &out[b, 0, 0], n, 1, ih, i12h, periodic)
    else:
        for b in prange(outer, nogil=True, num_threads=nthreads, schedule="static"):
            _plane(&u[b, 0, 0], &out[b, 0, 0], n, inner, ih, i12h, periodic)


cdef inline double _d3(const double* u, Py_ssize_t j, Py_ssize_t n, Py_ssize_t s, bint periodic) noexcept nogil:
    # undivided third difference on nodes j .. j + 3
    if periodic:
        return (-u[(j % n) * s] + 3.0 * u[((j + 1) % n) * s]
                - 3.0 * u[((j + 2) % n) * s] + u[((j + 3) % n) * s])
    return -u[j * s] + 3.0 * u[(j + 1) * s] - 3.0 * u[(j + 2) * s] + u[(j + 3) * s]


cdef inline void _diss_line(const double* u, const double* w, double* o, Py_ssize_t n, Py_ssize_t s,
                            bint periodic) noexcept nogil:
    cdef Py_ssize_t i, k, j, m
    cdef double c[4]
    cdef double acc
    c[0] = -1.0
    c[1] = 3.0
    c[2] = -3.0
    c[3] = 1.0
    m = n if periodic else n - 3
    for i in range(n):
        acc = 0.0
        for k in range(4):
            j = i - k
            if periodic:
                j = (j + n) % n
            elif j < 0 or j >= m:
                continue
            acc = acc + c[k] * w[j * s] * _d3(u, j, n, s, periodic)
        o[i * s] = acc


def diss3_blocks(const double[:, :, ::1] u, const double[:, :, ::1] w, double[:, :, ::1] out,
                 bint periodic, int nthreads=1):
    """``Delta^T diag(w) Delta u`` with the undivided third difference along axis 1.

    ``w`` has shape ``(wouter, m, inner)`` with ``m = n`` (periodic) or ``n - 3``;
    block ``b`` of ``u`` uses weight block ``b % wouter``.
    """
    cdef Py_ssize_t outer = u.shape[0], n = u.shape[1], inner = u.shape[2]
    cdef Py_ssize_t wouter = w.shape[0]
    cdef Py_ssize_t b, k
    for b in prange(outer, nogil=True, num_threads=nthreads, schedule="static"):
        for k in range(inner):
            _diss_line(&u[b, 0, k], &w[b % wouter, 0, k], &out[b, 0, k], n, inner, periodic)
