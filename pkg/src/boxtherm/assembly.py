"""Discrete operators of the box scheme.

Matrices over the unknowns act on the interior vertices only (homogeneous
Dirichlet data eliminated); ``mesh.interior`` gives the ordering.
"""
import numpy as np
import scipy.sparse as sp

from . import _kernels
from .coefficients import CoefficientModel, HypothesisViolation  # noqa: F401

# relative slack on the lower bound of the nonlocal integral
INTEGRAL_RTOL = 1e-12


def assemble_lumped_mass(dual):
    """Box areas of the interior vertices (diagonal of the lumped pairing)."""
    return dual.box_area[dual.mesh.interior].copy()


def p1_gradients(mesh):
    """Constant gradients of the three hat functions per triangle, (nt, 3, 2)."""
    v, t = mesh.vertices, mesh.triangles
    area2 = 2.0 * mesh.areas
    grads = np.empty((mesh.n_triangles, 3, 2))
    for i in range(3):
        a = v[t[:, (i + 1) % 3]]
        b = v[t[:, (i + 2) % 3]]
        grads[:, i, 0] = (a[:, 1] - b[:, 1]) / area2
        grads[:, i, 1] = (b[:, 0] - a[:, 0]) / area2
    return grads


def _scatter(mesh, local):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def assemble_consistent_mass(mesh):
    """P1 mass matrix over all vertices (exact elementwise integration)."""
    area = np.abs(mesh.areas)
    local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    return _scatter(mesh, area[:, None, None] * local[None])


def p1_stiffness(mesh):
    """P1 stiffness matrix over all vertices from element gradients."""
    g = p1_gradients(mesh)
    local = np.abs(mesh.areas)[:, None, None] * np.einsum("tid,tjd->tij", g, g)
    return _scatter(mesh, local)


def restrict(matrix, mesh):
    idx = mesh.interior
    return sp.csr_matrix(matrix.tocsr()[idx][:, idx])


# -- flux matrices ------------------------------------------------------------

class ReducedPattern:
    """Fixed CSR structure of edge-coupled operators on the interior vertices.

    Lets the solver rebuild ``diag + A(w)`` from per-edge weights without
    going through COO assembly each Picard iteration.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        n_int = len(mesh.interior)
        local = np.full(mesh.n_vertices, -1, dtype=np.int64)
        local[mesh.interior] = np.arange(n_int)
        a = local[mesh.edges[:, 0]]
        b = local[mesh.edges[:, 1]]
        both = (a >= 0) & (b >= 0)
        rows = np.concatenate([np.arange(n_int), a[both], b[both]])
        cols = np.concatenate([np.arange(n_int), b[both], a[both]])
        pattern = sp.csr_matrix((np.ones(len(rows)), (rows, cols)),
                                shape=(n_int, n_int))
        pattern.sort_indices()
        self.indptr = pattern.indptr.astype(np.int64)
        self.indices = pattern.indices.astype(np.int64)
        self.n = n_int
        self.nnz = len(self.indices)

        row_of = np.repeat(np.arange(n_int), np.diff(self.indptr))
        keys = row_of * n_int + self.indices      # sorted: CSR rows, sorted columns

        def slot(r, c):
            return np.searchsorted(keys, r * n_int + c).astype(np.int64)

        self.pos_ab = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.pos_ba = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.pos_ab[both] = slot(a[both], b[both])
        self.pos_ba[both] = slot(b[both], a[both])
        self.diag_slot = slot(np.arange(n_int), np.arange(n_int))
        self.diag_a = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.diag_b = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.diag_a[a >= 0] = self.diag_slot[a[a >= 0]]
        self.diag_b[b >= 0] = self.diag_slot[b[b >= 0]]

    def values(self, edge_weights, diag=None):
        data = _kernels.edge_csr_values(np.ascontiguousarray(edge_weights, dtype=float),
                                        self.pos_ab, self.pos_ba, self.diag_a,
                                        self.diag_b, self.nnz)
        if diag is not None:
            data[self.diag_slot] += diag
        return data

    def matrix(self, edge_weights, diag=None):
        return sp.csr_matrix((self.values(edge_weights, diag), self.indices.copy(),
                              self.indptr.copy()), shape=(self.n, self.n))


def edge_weights(dual, coeff, u):
    """Per-edge flux weight ``k((u_p + u_p*)/2) |Gamma_pp*| / |p - p*|``."""
    mesh = dual.mesh
    u = np.asarray(u, dtype=float)
    kbar = coeff.k(0.5 * (u[mesh.edges[:, 0]] + u[mesh.edges[:, 1]]))
    if np.any(kbar <= 0):
        e = int(np.flatnonzero(kbar <= 0)[0])
        raise HypothesisViolation(f"k = {kbar[e]:g} <= 0 on edge {e}")
    return kbar * dual.segment_length / dual.l_db


def flux_matrix_full(dual, weights):
    """Edge-weighted operator over all vertices (no elimination)."""
    mesh = dual.mesh
    a, b = mesh.edges[:, 0], mesh.edges[:, 1]
    n = mesh.n_vertices
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([weights, weights, -weights, -weights])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_flux_matrix(dual, coeff, u, pattern=None):
    """Box-scheme diffusion operator frozen at ``u``, over interior vertices.

    Row ``p`` is ``-(integral over the boundary of b_p of k du/dn)`` tested
    against the box indicator; symmetric positive definite when ``k > 0``.
    """
    pattern = pattern or ReducedPattern(dual.mesh)
    return pattern.matrix(edge_weights(dual, coeff, u))


# -- nonlocal source ----------------------------------------------------------

def nonlocal_integral(dual, u, coeff, rule="lumped"):
    """Approximation of the integral of ``f(u)`` over the domain."""
    u = np.asarray(u, dtype=float)
    if rule == "lumped":
        return float(np.dot(dual.box_area, coeff.f(u)))
    if rule == "centroid":
        mesh = dual.mesh
        uc = u[mesh.triangles].mean(axis=1)
        return float(np.dot(np.abs(mesh.areas), coeff.f(uc)))
    raise ValueError(f"unknown integral rule {rule!r}")


def assemble_nonlocal_source(dual, u, coeff, rule="lumped"):
    """Source vector ``lam f(u_p) |b_p| / I**2`` (zero on the boundary) and ``I``.

    Raises :class:`HypothesisViolation` when ``I`` drops below
    ``nu * |domain|``.
    """
    mesh = dual.mesh
    u = np.asarray(u, dtype=float)
    total = nonlocal_integral(dual, u, coeff, rule)
    floor = coeff.nu * mesh.domain_area
    if total < floor * (1.0 - INTEGRAL_RTOL):
        raise HypothesisViolation(
            f"integral of f(u) = {total:.6g} below nu*|domain| = {floor:.6g}")
    src = coeff.lam * coeff.f(u) * dual.box_area / total ** 2
    src[mesh.boundary] = 0.0
    return src, total


def write_coo(matrix, path_or_file):
    """Dump ``row col value`` lines (0-based)."""
    coo = sp.coo_matrix(matrix)
    lines = "".join(f"{r} {c} {v!r}\n" for r, c, v in
                    zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    if hasattr(path_or_file, "write"):
        path_or_file.write(lines)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(lines)
