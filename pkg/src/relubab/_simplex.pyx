# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense two-phase simplex (Bland's rule).

Operation-for-operation twin of ``_simplex_py``; build with
``-ffp-contract=off`` so no fused multiply-adds change the rounding.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF PIVOT_TOL = 1e-10

cdef int OPTIMAL = 0
cdef int INFEASIBLE = 1
cdef int UNBOUNDED = 2
cdef int ITERATION_LIMIT = 3


cdef void _pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t col) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nr = T.shape[0], nc = T.shape[1]
    cdef double piv = T[r, col]
    cdef double f
    for j in range(nc):
        T[r, j] = T[r, j] / piv
    for i in range(nr):
        if i == r:
            continue
        f = T[i, col]
        if f != 0.0:
            for j in range(nc):
                T[i, j] = T[i, j] - f * T[r, j]


cdef Py_ssize_t _entering(double[:, ::1] T, Py_ssize_t m, Py_ssize_t ncols,
                          double opt_tol) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(ncols):
        if T[m, j] < -opt_tol:
            return j
    return -1


cdef Py_ssize_t _leaving(double[:, ::1] T, Py_ssize_t m, Py_ssize_t col,
                         long long[::1] basis) noexcept nogil:
    cdef Py_ssize_t i, best = -1
    cdef Py_ssize_t rhs_col = T.shape[1] - 1
    cdef double a, ratio, best_ratio = 0.0
    for i in range(m):
        a = T[i, col]
        if a > PIVOT_TOL:
            ratio = T[i, rhs_col] / a
            if (best < 0 or ratio < best_ratio - 1e-12
                    or (ratio <= best_ratio + 1e-12 and basis[i] < basis[best])):
                best = i
                best_ratio = ratio
    return best


cdef int _run(double[:, ::1] T, long long[::1] basis, Py_ssize_t m,
              Py_ssize_t ncols, double opt_tol, long long max_iter,
              long long* iters) noexcept nogil:
    cdef Py_ssize_t col, r
    while True:
        col = _entering(T, m, ncols, opt_tol)
        if col < 0:
            return OPTIMAL
        r = _leaving(T, m, col, basis)
        if r < 0:
            return UNBOUNDED
        if iters[0] >= max_iter:
            return ITERATION_LIMIT
        _pivot(T, r, col)
        basis[r] = col
        iters[0] += 1


def solve_standard(A, b, c, double feas_tol=1e-8, double opt_tol=1e-8,
                   long long max_iter=-1):
    """Return ``(status, s, value, iterations)``."""
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1]
    cdef Py_ssize_t i, j, k, n_art = 0, ncols
    cdef long long iters = 0
    cdef int status
    cdef double cb

    if max_iter < 0:
        max_iter = 10 * (n + m) * (n + m)
    for i in range(m):
        if bv[i] < 0:
            n_art += 1
    ncols = n + m + n_art
    T_arr = np.zeros((m + 1, ncols + 1))
    cdef double[:, ::1] T = T_arr
    basis_arr = np.empty(m, dtype=np.int64)
    cdef long long[::1] basis = basis_arr

    k = 0
    for i in range(m):
        if bv[i] < 0:
            for j in range(n):
                T[i, j] = -Av[i, j]
            T[i, n + i] = -1.0
            T[i, n + m + k] = 1.0
            T[i, ncols] = -bv[i]
            basis[i] = n + m + k
            k += 1
        else:
            for j in range(n):
                T[i, j] = Av[i, j]
            T[i, n + i] = 1.0
            T[i, ncols] = bv[i]
            basis[i] = n + i

    if n_art:
        for j in range(n + m, ncols):
            T[m, j] = 1.0
        for i in range(m):
            if bv[i] < 0:
                for j in range(ncols + 1):
                    T[m, j] = T[m, j] - T[i, j]
        status = _run(T, basis, m, ncols, opt_tol, max_iter, &iters)
        if status == ITERATION_LIMIT:
            return status, None, np.nan, iters
        if -T[m, ncols] > feas_tol:
            return INFEASIBLE, None, np.nan, iters
        for i in range(m):
            if basis[i] >= n + m:
                for j in range(n + m):
                    if T[i, j] > PIVOT_TOL or T[i, j] < -PIVOT_TOL:
                        _pivot(T, i, j)
                        basis[i] = j
                        break

    for j in range(ncols + 1):
        T[m, j] = 0.0
    for j in range(n):
        T[m, j] = cv[j]
    for i in range(m):
        cb = T[m, basis[i]] if basis[i] < n + m else 0.0
        if cb != 0.0:
            for j in range(ncols + 1):
                T[m, j] = T[m, j] - cb * T[i, j]
    status = _run(T, basis, m, n + m, opt_tol, max_iter, &iters)
    if status != OPTIMAL:
        return status, None, np.nan, iters
    s = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            s[basis[i]] = T[i, ncols]
    return OPTIMAL, s, -T[m, ncols], iters
