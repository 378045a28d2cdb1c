"""Circumcenter dual ("box") mesh of a non-obtuse triangulation."""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .mesh import MeshError

# barycentric slack allowed when checking that a circumcenter is in the triangle
BARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DualMesh:
    """Boxes ``b_p`` and the interface segments between them.

    Segment ``e`` is the interface between the boxes of ``mesh.edges[e]``
    (``p < p_star``). It consists of up to two pieces, one per triangle
    sharing the edge, each running from the triangle circumcenter to the
    edge midpoint. Pieces of length zero (right triangles) are kept.
    """
    mesh: object = field(repr=False)
    circumcenters: np.ndarray
    midpoints: np.ndarray
    piece_length: np.ndarray      # (nt, 3), piece of local edge j in triangle t
    corner_area: np.ndarray       # (nt, 3), part of triangle t in the box of local vertex i
    box_area: np.ndarray          # (nv,)
    piece_tri: np.ndarray         # (ne, 2), owning triangle or -1
    piece_local: np.ndarray       # (ne, 2), local edge index in that triangle or -1
    segment_length: np.ndarray    # (ne,), total |Gamma_pp*|
    l_db: np.ndarray              # (ne,), |p - p*|
    unit_normal: np.ndarray       # (ne, 2), (p* - p) / |p* - p|

    @property
    def p(self):
        return self.mesh.edges[:, 0]

    @property
    def p_star(self):
        return self.mesh.edges[:, 1]

    @property
    def n_segments(self):
        return len(self.segment_length)

    def pieces(self, e):
        """``[(triangle, q, m, length), ...]`` for segment ``e``."""
        out = []
        for t, j in zip(self.piece_tri[e], self.piece_local[e]):
            if t < 0:
                continue
            out.append((int(t), self.circumcenters[t], self.midpoints[e],
                        float(self.piece_length[t, j])))
        return out

    def box_polygon(self, p):
        """Counterclockwise vertex list of box ``b_p`` (duplicates removed)."""
        mesh = self.mesh
        center = mesh.vertices[p]
        pts = []
        tris, locs = np.nonzero(mesh.triangles == p)
        for t, i in zip(tris, locs):
            pts.append(self.midpoints[mesh.tri_edges[t, (i + 2) % 3]])
            pts.append(self.circumcenters[t])
            pts.append(self.midpoints[mesh.tri_edges[t, (i + 1) % 3]])
        pts = np.unique(np.round(np.asarray(pts), 14), axis=0)
        d = pts - center
        ang = np.arctan2(d[:, 1], d[:, 0])
        order = np.argsort(ang)
        pts, ang = pts[order], ang[order]
        if mesh.boundary[p]:
            # the box contains p itself; it sits in the largest angular gap,
            # which faces the outside of the convex domain
            gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
            k = int(np.argmax(gaps))
            pts = np.vstack([pts[k + 1:], pts[:k + 1], center[None]])
        return pts


def circumcenters(vertices, triangles):
    p0 = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]] - p0
    c = vertices[triangles[:, 2]] - p0
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    scale = np.maximum((b * b).sum(1), (c * c).sum(1))
    if np.any(np.abs(d) <= 1e-14 * scale):
        raise MeshError("degenerate triangle: circumcenter undefined")
    bb = (b * b).sum(1)
    cc = (c * c).sum(1)
    ux = (c[:, 1] * bb - b[:, 1] * cc) / d
    uy = (b[:, 0] * cc - c[:, 0] * bb) / d
    return p0 + np.column_stack([ux, uy])


def _barycentric(vertices, triangles, points):
    p0 = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]] - p0
    c = vertices[triangles[:, 2]] - p0
    r = points - p0
    det = b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0]
    l1 = (r[:, 0] * c[:, 1] - r[:, 1] * c[:, 0]) / det
    l2 = (b[:, 0] * r[:, 1] - b[:, 1] * r[:, 0]) / det
    return np.column_stack([1.0 - l1 - l2, l1, l2])


def _quad_area(a, b, c, d):
    x = np.stack([a[:, 0], b[:, 0], c[:, 0], d[:, 0]], axis=1)
    y = np.stack([a[:, 1], b[:, 1], c[:, 1], d[:, 1]], axis=1)
    return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)


def build_dual(mesh):
    v, t = mesh.vertices, mesh.triangles
    q = circumcenters(v, t)
    if np.any(_barycentric(v, t, q) < -BARY_TOL):
        raise MeshError("circumcenter outside its triangle (obtuse triangle)")

    mids = 0.5 * (v[mesh.edges[:, 0]] + v[mesh.edges[:, 1]])
    m_loc = mids[mesh.tri_edges]                       # (nt, 3, 2)
    piece_length = np.linalg.norm(m_loc - q[:, None, :], axis=2)

    corner = np.empty(t.shape)
    for i in range(3):
        corner[:, i] = _quad_area(v[t[:, i]], m_loc[:, (i + 2) % 3], q,
                                  m_loc[:, (i + 1) % 3])
    box_area = _kernels.box_areas(t, corner, mesh.n_vertices)

    ne = mesh.n_edges
    flat = mesh.tri_edges.ravel()
    order = np.argsort(flat, kind="stable")
    slot = np.zeros(len(flat), dtype=np.int64)
    sorted_e = flat[order]
    first = np.searchsorted(sorted_e, sorted_e, side="left")
    slot[order] = np.arange(len(flat)) - first
    piece_tri = np.full((ne, 2), -1, dtype=np.int64)
    piece_local = np.full((ne, 2), -1, dtype=np.int64)
    piece_tri[flat, slot] = np.repeat(np.arange(mesh.n_triangles), 3)
    piece_local[flat, slot] = np.tile(np.arange(3), mesh.n_triangles)

    segment_length = np.bincount(flat, weights=piece_length.ravel(), minlength=ne)
    d = v[mesh.edges[:, 1]] - v[mesh.edges[:, 0]]
    l_db = np.hypot(d[:, 0], d[:, 1])
    return DualMesh(
        mesh=mesh,
        circumcenters=q,
        midpoints=mids,
        piece_length=piece_length,
        corner_area=corner,
        box_area=box_area,
        piece_tri=piece_tri,
        piece_local=piece_local,
        segment_length=segment_length,
        l_db=l_db,
        unit_normal=d / l_db[:, None],
    )


def orthogonality_residual(dual):
    """Max |cos| between each nonzero piece and its primal edge."""
    mesh = dual.mesh
    worst = 0.0
    for j in range(3):
        e = mesh.tri_edges[:, j]
        piece = dual.midpoints[e] - dual.circumcenters
        n = np.linalg.norm(piece, axis=1)
        keep = n > 1e-14 * mesh.h
        if not keep.any():
            continue
        cos = np.abs(np.einsum("ij,ij->i", piece[keep], dual.unit_normal[e[keep]]))
        worst = max(worst, float((cos / n[keep]).max()))
    return worst
