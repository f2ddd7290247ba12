"""Pure-numpy dense two-phase simplex (Bland's rule).

Solves ``min c.s  s.t.  A s <= b, s >= 0`` with ``b`` of either sign. The
arithmetic mirrors ``_simplex.pyx`` operation for operation so that both
kernels return bitwise-identical results.
"""
import numpy as np

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERATION_LIMIT = 3

PIVOT_TOL = 1e-10


def _pivot(T, r, col):
    T[r] /= T[r, col]
    f = T[:, col].copy()
    f[r] = 0.0
    T -= np.outer(f, T[r])


def _entering(T, m, ncols, opt_tol):
    d = T[m, :ncols]
    idx = np.flatnonzero(d < -opt_tol)
    return int(idx[0]) if idx.size else -1


def _leaving(T, m, col, basis):
    # min-ratio test; near-ties go to the smallest basic index (Bland)
    rhs_col = T.shape[1] - 1
    best = -1
    best_ratio = 0.0
    for i in range(m):
        a = T[i, col]
        if a > PIVOT_TOL:
            ratio = T[i, rhs_col] / a
            if (
                best < 0
                or ratio < best_ratio - 1e-12
                or (ratio <= best_ratio + 1e-12 and basis[i] < basis[best])
            ):
                best = i
                best_ratio = ratio
    return best


def _run(T, basis, m, ncols, opt_tol, max_iter, iters):
    while True:
        col = _entering(T, m, ncols, opt_tol)
        if col < 0:
            return OPTIMAL, iters
        r = _leaving(T, m, col, basis)
        if r < 0:
            return UNBOUNDED, iters
        if iters >= max_iter:
            return ITERATION_LIMIT, iters
        _pivot(T, r, col)
        basis[r] = col
        iters += 1


def solve_standard(A, b, c, feas_tol=1e-8, opt_tol=1e-8, max_iter=-1):
    """Return ``(status, s, value, iterations)``.

    ``s`` and ``value`` are only meaningful when ``status == OPTIMAL``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    if max_iter < 0:
        max_iter = 10 * (n + m) ** 2
    neg = b < 0
    n_art = int(neg.sum())
    ncols = n + m + n_art
    T = np.zeros((m + 1, ncols + 1))
    basis = np.empty(m, dtype=np.int64)
    k = 0
    for i in range(m):
        if neg[i]:
            T[i, :n] = -A[i]
            T[i, n + i] = -1.0
            T[i, n + m + k] = 1.0
            T[i, ncols] = -b[i]
            basis[i] = n + m + k
            k += 1
        else:
            T[i, :n] = A[i]
            T[i, n + i] = 1.0
            T[i, ncols] = b[i]
            basis[i] = n + i

    iters = 0
    if n_art:
        T[m, n + m:ncols] = 1.0
        for i in range(m):
            if neg[i]:
                T[m] -= T[i]
        status, iters = _run(T, basis, m, ncols, opt_tol, max_iter, iters)
        if status == ITERATION_LIMIT:
            return status, None, np.nan, iters
        if -T[m, ncols] > feas_tol:
            return INFEASIBLE, None, np.nan, iters
        for i in range(m):
            if basis[i] >= n + m:
                row = T[i, :n + m]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nz.size:
                    col = int(nz[0])
                    _pivot(T, i, col)
                    basis[i] = col

    # phase II; artificial columns never re-enter
    T[m] = 0.0
    T[m, :n] = c
    for i in range(m):
        cb = T[m, basis[i]] if basis[i] < n + m else 0.0
        if cb != 0.0:
            T[m] -= cb * T[i]
    status, iters = _run(T, basis, m, n + m, opt_tol, max_iter, iters)
    if status != OPTIMAL:
        return status, None, np.nan, iters
    s = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            s[basis[i]] = T[i, ncols]
    value = -T[m, ncols]
    return OPTIMAL, s, value, iters
