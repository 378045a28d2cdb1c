"""Hot inner loops with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``BOXTHERM_NUMBA`` is not
set to ``0``. Both paths are always importable as ``*_nb`` / ``*_np`` so
they can be compared directly (see ``benchmarks/bench_kernels.py``).
"""
import os

import numpy as np
import scipy.sparse as sp

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda fn: fn


# above this many unknowns scipy's compiled CSR product beats the numba
# matvec (see benchmarks/bench_kernels.py), so CG falls back to numpy
CG_NUMBA_MAX_N = 2000


def numba_enabled():
    return HAVE_NUMBA and os.environ.get("BOXTHERM_NUMBA", "1") != "0"


# -- box areas ---------------------------------------------------------------

def box_areas_np(triangles, corner_areas, n_vertices):
    return np.bincount(triangles.ravel(), weights=corner_areas.ravel(),
                       minlength=n_vertices)


@njit(cache=True)
def box_areas_nb(triangles, corner_areas, n_vertices):
    out = np.zeros(n_vertices)
    for t in range(triangles.shape[0]):
        for i in range(3):
            out[triangles[t, i]] += corner_areas[t, i]
    return out


# -- edge weights -> reduced CSR values ---------------------------------------

def edge_csr_values_np(weights, pos_ab, pos_ba, diag_a, diag_b, nnz):
    """Scatter symmetric edge weights into a CSR value array.

    ``pos_ab``/``pos_ba`` hold the CSR slot of the off-diagonal pair, or -1
    when one endpoint is eliminated. ``diag_a``/``diag_b`` hold the diagonal
    slot of each endpoint, or -1 for eliminated endpoints.
    """
    data = np.zeros(nnz)
    off = pos_ab >= 0
    data[pos_ab[off]] -= weights[off]
    data[pos_ba[off]] -= weights[off]
    ma = diag_a >= 0
    mb = diag_b >= 0
    data += np.bincount(diag_a[ma], weights=weights[ma], minlength=nnz)
    data += np.bincount(diag_b[mb], weights=weights[mb], minlength=nnz)
    return data


@njit(cache=True)
def edge_csr_values_nb(weights, pos_ab, pos_ba, diag_a, diag_b, nnz):
    data = np.zeros(nnz)
    for e in range(weights.shape[0]):
        w = weights[e]
        if pos_ab[e] >= 0:
            data[pos_ab[e]] -= w
            data[pos_ba[e]] -= w
        if diag_a[e] >= 0:
            data[diag_a[e]] += w
        if diag_b[e] >= 0:
            data[diag_b[e]] += w
    return data


# -- conjugate gradients on CSR arrays ----------------------------------------

def cg_csr_np(indptr, indices, data, b, x0, tol, maxiter):
    n = b.shape[0]
    A = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    x = x0.copy()
    bnorm = np.sqrt(b @ b)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    r = b - A @ x
    rr = r @ r
    stop = (tol * bnorm) ** 2
    if rr <= stop:
        return x, 0, np.sqrt(rr)
    p = r.copy()
    for it in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rr / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        if rr_new <= stop:
            return x, it, np.sqrt(rr_new)
        p *= rr_new / rr
        p += r
        rr = rr_new
    return x, -1, np.sqrt(rr)


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x, out):
    for i in range(out.shape[0]):
        s = 0.0
        for j in range(indptr[i], indptr[i + 1]):
            s += data[j] * x[indices[j]]
        out[i] = s


@njit(cache=True)
def cg_csr_nb(indptr, indices, data, b, x0, tol, maxiter):
    n = b.shape[0]
    x = x0.copy()
    bnorm = np.sqrt(np.dot(b, b))
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    Ap = np.empty(n)
    _csr_matvec(indptr, indices, data, x, Ap)
    r = b - Ap
    rr = np.dot(r, r)
    stop = (tol * bnorm) ** 2
    if rr <= stop:
        return x, 0, np.sqrt(rr)
    p = r.copy()
    for it in range(1, maxiter + 1):
        _csr_matvec(indptr, indices, data, p, Ap)
        alpha = rr / np.dot(p, Ap)
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * Ap[i]
        rr_new = np.dot(r, r)
        if rr_new <= stop:
            return x, it, np.sqrt(rr_new)
        beta = rr_new / rr
        for i in range(n):
            p[i] = r[i] + beta * p[i]
        rr = rr_new
    return x, -1, np.sqrt(rr)


def box_areas(triangles, corner_areas, n_vertices):
    if numba_enabled():
        return box_areas_nb(triangles, corner_areas, n_vertices)
    return box_areas_np(triangles, corner_areas, n_vertices)


def edge_csr_values(weights, pos_ab, pos_ba, diag_a, diag_b, nnz):
    fn = edge_csr_values_nb if numba_enabled() else edge_csr_values_np
    return fn(weights, pos_ab, pos_ba, diag_a, diag_b, nnz)


def cg_csr(indptr, indices, data, b, x0, tol, maxiter):
    use_nb = numba_enabled() and b.shape[0] <= CG_NUMBA_MAX_N
    fn = cg_csr_nb if use_nb else cg_csr_np
    return fn(indptr, indices, data, b, x0, float(tol), int(maxiter))
