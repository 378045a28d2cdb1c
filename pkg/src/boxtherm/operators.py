"""Interpolation and projection operators, and the norms used to measure them.

Fields are plain float arrays indexed by mesh vertex. A field "in S_h^0"
has zeros on every boundary-flagged vertex.
"""
from dataclasses import dataclass

import numpy as np

from .assembly import (assemble_consistent_mass, flux_matrix_full, p1_gradients,
                       p1_stiffness)
from .quadrature import segment_midpoints, triangle_points


@dataclass(frozen=True)
class NormBundle:
    l2: float
    h1_semi: float
    norm_0h: float
    norm_1h: float

    @property
    def h1(self):
        return float(np.hypot(self.l2, self.h1_semi))


def check_field(mesh, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (mesh.n_vertices,):
        raise ValueError(f"field has shape {v.shape}, mesh has {mesh.n_vertices} vertices")
    return v


def lagrange_interpolate(mesh, u):
    """Nodal values ``u(p)`` of a vectorized ``u(x, y)``."""
    x, y = mesh.vertices.T
    return np.asarray(np.broadcast_to(u(x, y), x.shape), dtype=float).copy()


def l2_project(mesh, u, dirichlet=False, degree=2, tol=1e-13, maxiter=None):
    """L2 projection of ``u(x, y)`` onto continuous P1.

    With ``dirichlet=True`` the projection is onto the fields vanishing on
    the boundary. Load vectors use the triangle rule of ``degree``.
    """
    from .solver import cg_solve

    pts, w, bary = triangle_points(mesh, degree)
    vals = u(pts[..., 0], pts[..., 1]) * w                       # (nt, k)
    load = np.einsum("tk,kj->tj", vals, bary)                     # (nt, 3)
    b = np.bincount(mesh.triangles.ravel(), weights=load.ravel(),
                    minlength=mesh.n_vertices)
    M = assemble_consistent_mass(mesh)
    out = np.zeros(mesh.n_vertices)
    idx = mesh.interior if dirichlet else np.arange(mesh.n_vertices)
    if len(idx):
        res = cg_solve(M[idx][:, idx], b[idx], tol=tol, maxiter=maxiter)
        out[idx] = res.x
    return out


def _as_field(a):
    if callable(a):
        return a
    c = float(a)
    return lambda x, y: np.full(np.shape(x), c)


def flux_projection(dual, a, u, grad_u, n_quad=4, tol=1e-13, maxiter=None):
    """Flux projection: ``i_h u`` plus the zero-boundary correction whose box
    fluxes (weighted by ``a``) reproduce those of ``u``.

    ``a`` is a constant or ``a(x, y)``; ``grad_u(x, y)`` returns ``(ux, uy)``.
    Fluxes of ``u`` and the weights of the discrete operator are both
    integrated with an ``n_quad``-cell composite midpoint rule per piece.
    """
    from .solver import cg_solve

    mesh = dual.mesh
    a = _as_field(a)
    ne = mesh.n_edges
    aw = np.zeros(ne)        # integral of a over the segment
    flux = np.zeros(ne)      # integral of a grad(u).n over the segment, n = p -> p*
    for j in range(3):
        e = mesh.tri_edges[:, j]
        pts, w = segment_midpoints(dual.circumcenters, dual.midpoints[e], n_quad)
        x, y = pts[..., 0], pts[..., 1]
        av = a(x, y) * w
        if np.any(av < 0):
            raise ValueError("flux projection coefficient must be positive")
        gx, gy = grad_u(x, y)
        nrm = dual.unit_normal[e]
        dn = gx * nrm[:, 0, None] + gy * nrm[:, 1, None]
        np.add.at(aw, e, av.sum(axis=1))
        np.add.at(flux, e, (av * dn).sum(axis=1))
    A = flux_matrix_full(dual, aw / dual.l_db)
    rhs = np.zeros(mesh.n_vertices)
    np.add.at(rhs, mesh.edges[:, 0], -flux)
    np.add.at(rhs, mesh.edges[:, 1], flux)

    base = lagrange_interpolate(mesh, u)
    idx = mesh.interior
    out = base.copy()
    if len(idx):
        r = rhs[idx] - (A @ base)[idx]
        res = cg_solve(A[idx][:, idx], r, tol=tol, maxiter=maxiter)
        out[idx] += res.x
    return out


def compute_norms(dual, v):
    mesh = dual.mesh
    v = check_field(mesh, v)
    M = assemble_consistent_mass(mesh)
    K = p1_stiffness(mesh)
    jumps = v[mesh.edges[:, 1]] - v[mesh.edges[:, 0]]
    return NormBundle(
        l2=float(np.sqrt(max(v @ (M @ v), 0.0))),
        h1_semi=float(np.sqrt(max(v @ (K @ v), 0.0))),
        norm_0h=float(np.sqrt(np.dot(dual.box_area, v * v))),
        norm_1h=float(np.sqrt(np.dot(jumps, jumps))),
    )


def w1inf_norm(mesh, v):
    """``max |v| + max |grad v|`` of a P1 field."""
    v = check_field(mesh, v)
    g = np.einsum("tid,ti->td", p1_gradients(mesh), v[mesh.triangles])
    return float(np.abs(v).max() + np.hypot(g[:, 0], g[:, 1]).max())


def function_errors(mesh, v, u, grad_u=None, degree=5):
    """L2 and H1-seminorm of ``v - u`` for a P1 field ``v`` and exact ``u``.

    Integrals use the triangle rule of ``degree``; the seminorm is skipped
    (returned as nan) when ``grad_u`` is not given.
    """
    v = check_field(mesh, v)
    pts, w, bary = triangle_points(mesh, degree)
    x, y = pts[..., 0], pts[..., 1]
    vq = np.einsum("kj,tj->tk", bary, v[mesh.triangles])
    l2 = np.sqrt(np.sum(w * (vq - u(x, y)) ** 2))
    if grad_u is None:
        return float(l2), float("nan")
    g = np.einsum("tid,ti->td", p1_gradients(mesh), v[mesh.triangles])
    ux, uy = grad_u(x, y)
    semi = np.sqrt(np.sum(w * ((g[:, 0, None] - ux) ** 2 + (g[:, 1, None] - uy) ** 2)))
    return float(l2), float(semi)


def jump_identity_residual(dual, v):
    """Max over nonzero dual pieces of ``|v(p*) - v(p) - (dv/dn) |p - p*||``.

    ``dv/dn`` is the gradient of ``v`` on the piece's triangle along
    ``(p* - p)/|p* - p|``.
    """
    mesh = dual.mesh
    v = check_field(mesh, v)
    g = np.einsum("tid,ti->td", p1_gradients(mesh), v[mesh.triangles])
    jumps = v[mesh.edges[:, 1]] - v[mesh.edges[:, 0]]
    worst = 0.0
    for j in range(3):
        e = mesh.tri_edges[:, j]
        keep = dual.piece_length[:, j] > 1e-14 * mesh.h
        if not keep.any():
            continue
        dn = np.einsum("td,td->t", g[keep], dual.unit_normal[e[keep]])
        worst = max(worst, float(np.abs(jumps[e[keep]] - dn * dual.l_db[e[keep]]).max()))
    return worst


def box_interpolation_error(dual, v):
    """``||v - I_h v||`` for a P1 field, integrated exactly over each box piece."""
    mesh = dual.mesh
    v = check_field(mesh, v)
    verts, t = mesh.vertices, mesh.triangles
    g = np.einsum("tid,ti->td", p1_gradients(mesh), v[t])
    m_loc = dual.midpoints[mesh.tri_edges]
    q = dual.circumcenters
    total = 0.0
    for i in range(3):
        p = verts[t[:, i]]
        for a, b in ((m_loc[:, (i + 2) % 3], q), (q, m_loc[:, (i + 1) % 3])):
            # v - v(p) is linear, its square quadratic: the edge-midpoint rule is exact
            area = 0.5 * np.abs((a[:, 0] - p[:, 0]) * (b[:, 1] - p[:, 1])
                                - (a[:, 1] - p[:, 1]) * (b[:, 0] - p[:, 0]))
            s = 0.0
            for mid in (0.5 * (p + a), 0.5 * (a + b), 0.5 * (b + p)):
                s = s + np.einsum("td,td->t", g, mid - p) ** 2
            total += float(np.sum(area * s / 3.0))
    return float(np.sqrt(total))


def random_s0_field(mesh, rng):
    v = rng.standard_normal(mesh.n_vertices)
    v[mesh.boundary] = 0.0
    return v
