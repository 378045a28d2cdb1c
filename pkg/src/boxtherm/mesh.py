"""Conforming, non-obtuse triangulations of a convex polygon."""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

# obtuse-angle slack, radians
ANGLE_TOL = 1e-9

# local edge j of a triangle is opposite local vertex j
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


class MeshError(ValueError):
    """Invalid mesh data; ``line`` is the 1-based file line when known."""

    def __init__(self, reason, line=None):
        self.reason = reason
        self.line = line
        msg = reason if line is None else f"line {line}: {reason}"
        super().__init__(msg)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    edges: np.ndarray = field(repr=False)
    tri_edges: np.ndarray = field(repr=False)
    edge_count: np.ndarray = field(repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def interior(self):
        """Indices of vertices carrying unknowns."""
        return np.flatnonzero(~self.boundary)

    @property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def h(self):
        return float(self.edge_lengths.max())

    @property
    def areas(self):
        return signed_areas(self.vertices, self.triangles)

    @property
    def domain_area(self):
        # shoelace over the oriented boundary edges, independent of the sum
        # of element areas
        v = self.vertices
        total = 0.0
        for j, (a, b) in enumerate(LOCAL_EDGES):
            on_bnd = self.edge_count[self.tri_edges[:, j]] == 1
            pa = v[self.triangles[on_bnd, a]]
            pb = v[self.triangles[on_bnd, b]]
            total += np.sum(pa[:, 0] * pb[:, 1] - pb[:, 0] * pa[:, 1])
        return 0.5 * float(total)

    def __repr__(self):
        return (f"Mesh(n_vertices={self.n_vertices}, "
                f"n_triangles={self.n_triangles}, h={self.h:.6g})")


def signed_areas(vertices, triangles):
    p0, p1, p2 = (vertices[triangles[:, i]] for i in range(3))
    d1 = p1 - p0
    d2 = p2 - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangle_angles(vertices, triangles):
    """Interior angle at each local vertex, shape (nt, 3)."""
    out = np.empty(triangles.shape)
    for i in range(3):
        p = vertices[triangles[:, i]]
        a = vertices[triangles[:, (i + 1) % 3]] - p
        b = vertices[triangles[:, (i + 2) % 3]] - p
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        out[:, i] = np.arctan2(np.abs(cross), np.einsum("ij,ij->i", a, b))
    return out


def _edge_topology(triangles):
    local = triangles[:, LOCAL_EDGES]  # (nt, 3, 2)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True,
                                       return_counts=True)
    return edges, inverse.reshape(-1, 3), counts


def build_mesh(vertices, triangles, boundary=None, validate=True):
    """Assemble a :class:`Mesh`; boundary flags are derived when omitted."""
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must have shape (n, 2)")
    if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
        raise MeshError("triangles must have shape (m, 3) with m >= 1")
    if triangles.min() < 0 or triangles.max() >= len(vertices):
        raise MeshError("vertex index out of range")
    edges, tri_edges, counts = _edge_topology(triangles)
    derived = np.zeros(len(vertices), dtype=bool)
    derived[edges[counts == 1].ravel()] = True
    if boundary is None:
        boundary = derived
    boundary = np.asarray(boundary, dtype=bool)
    mesh = Mesh(vertices, triangles, boundary, edges, tri_edges, counts)
    if validate:
        problems = mesh_problems(mesh)
        if problems:
            raise MeshError(problems[0][1])
    return mesh


def mesh_problems(mesh):
    """List of ``(triangle_or_None, reason)`` invariant violations."""
    out = []
    areas = mesh.areas
    for t in np.flatnonzero(areas <= 0):
        out.append((int(t), "triangle is not counterclockwise"))
    if np.any(mesh.edge_count > 2):
        e = int(np.flatnonzero(mesh.edge_count > 2)[0])
        t = int(np.flatnonzero((mesh.tri_edges == e).any(axis=1))[0])
        out.append((t, "non-conforming edge: shared by more than two triangles"))
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.triangles.ravel()] = True
    if not used.all():
        out.append((None, "vertex not referenced by any triangle"))
    if out:
        return out
    angles = triangle_angles(mesh.vertices, mesh.triangles)
    for t in np.flatnonzero(angles.max(axis=1) > np.pi / 2 + ANGLE_TOL):
        out.append((int(t), "obtuse triangle"))
    bnd_edges = mesh.edges[mesh.edge_count == 1]
    if not _edges_on_hull(mesh.vertices, bnd_edges):
        out.append((None, "non-conforming edge: interior edge used by one triangle"))
    derived = np.zeros(mesh.n_vertices, dtype=bool)
    derived[bnd_edges.ravel()] = True
    if np.any(derived != mesh.boundary):
        v = int(np.flatnonzero(derived != mesh.boundary)[0])
        out.append((None, f"boundary flag of vertex {v} disagrees with topology"))
    return out


def _edges_on_hull(vertices, edges):
    """True when every edge lies on the boundary of the convex hull."""
    hull = ConvexHull(vertices)
    # hull.equations rows: (nx, ny, offset), nx*x + ny*y + offset = 0 on facet
    scale = np.abs(vertices).max() + 1.0
    dist_a = np.abs(vertices[edges[:, 0]] @ hull.equations[:, :2].T
                    + hull.equations[:, 2])
    dist_b = np.abs(vertices[edges[:, 1]] @ hull.equations[:, :2].T
                    + hull.equations[:, 2])
    on = (dist_a < 1e-10 * scale) & (dist_b < 1e-10 * scale)
    return bool(on.any(axis=1).all())


def generate_structured_mesh(n):
    """Unit square cut into ``n x n`` cells, each split along the SW-NE diagonal."""
    if int(n) != n or n < 1:
        raise MeshError(f"subdivision count must be a positive integer, got {n!r}")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    x, y = np.meshgrid(s, s)
    vertices = np.column_stack([x.ravel(), y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    ll = (j * (n + 1) + i).ravel()
    lr, ul, ur = ll + 1, ll + n + 1, ll + n + 2
    triangles = np.concatenate([np.column_stack([ll, lr, ur]),
                                np.column_stack([ll, ur, ul])])
    boundary = ((vertices == 0.0) | (vertices == 1.0)).any(axis=1)
    return build_mesh(vertices, triangles, boundary)


def refine_uniform(mesh):
    """Red refinement: each triangle becomes four similar children.

    New vertex ``n_vertices + e`` is the midpoint of ``mesh.edges[e]``, so
    old vertex numbering is preserved (see :func:`prolongation_matrix`).
    """
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    t = mesh.triangles
    m = nv + mesh.tri_edges  # m[:, j] is the midpoint opposite local vertex j
    triangles = np.concatenate([
        np.column_stack([t[:, 0], m[:, 2], m[:, 1]]),
        np.column_stack([m[:, 2], t[:, 1], m[:, 0]]),
        np.column_stack([m[:, 1], m[:, 0], t[:, 2]]),
        np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
    ])
    boundary = np.concatenate([mesh.boundary, mesh.edge_count == 1])
    return build_mesh(vertices, triangles, boundary)


def prolongation_matrix(mesh):
    """Sparse map from P1 values on ``mesh`` to ``refine_uniform(mesh)``."""
    import scipy.sparse as sp

    nv, ne = mesh.n_vertices, mesh.n_edges
    rows = np.concatenate([np.arange(nv), np.repeat(nv + np.arange(ne), 2)])
    cols = np.concatenate([np.arange(nv), mesh.edges.ravel()])
    vals = np.concatenate([np.ones(nv), np.full(2 * ne, 0.5)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(nv + ne, nv))


def structured_level(level):
    """Level ``l`` of the standard hierarchy: ``n = 2**l`` cells per side."""
    return generate_structured_mesh(2 ** level)


@dataclass
class MeshReport:
    min_angle: float
    max_angle: float
    min_edge: float
    max_edge: float
    h: float
    aspect_ratio: float
    quasi_uniformity: float
    conforming: bool
    non_obtuse: bool
    problems: list

    @property
    def ok(self):
        return not self.problems

    def lines(self):
        return [
            f"min_angle_deg {self.min_angle:.12g}",
            f"max_angle_deg {self.max_angle:.12g}",
            f"min_edge {self.min_edge:.12g}",
            f"max_edge {self.max_edge:.12g}",
            f"h {self.h:.12g}",
            f"aspect_ratio {self.aspect_ratio:.12g}",
            f"quasi_uniformity {self.quasi_uniformity:.12g}",
            f"conforming {int(self.conforming)}",
            f"non_obtuse {int(self.non_obtuse)}",
        ] + [f"problem {reason}" for _, reason in self.problems]


def validate_mesh(mesh):
    """Geometric quality report; never raises on bad meshes."""
    problems = mesh_problems(mesh)
    angles = np.degrees(triangle_angles(mesh.vertices, mesh.triangles))
    lengths = mesh.edge_lengths
    # circumradius / inradius style bound via longest edge over shortest altitude
    v = mesh.vertices
    t = mesh.triangles
    tri_len = np.column_stack([
        np.linalg.norm(v[t[:, b]] - v[t[:, a]], axis=1) for a, b in LOCAL_EDGES
    ])
    area = np.abs(mesh.areas)
    with np.errstate(divide="ignore"):
        aspect = tri_len.max(axis=1) ** 2 / (2.0 * area)
    reasons = [r for _, r in problems]
    return MeshReport(
        min_angle=float(angles.min()),
        max_angle=float(angles.max()),
        min_edge=float(lengths.min()),
        max_edge=float(lengths.max()),
        h=float(lengths.max()),
        aspect_ratio=float(aspect.max()),
        quasi_uniformity=float(lengths.max() / lengths.min()),
        conforming=not any("non-conforming" in r for r in reasons),
        non_obtuse=float(angles.max()) <= 90.0 + np.degrees(ANGLE_TOL),
        problems=problems,
    )


# -- text format ---------------------------------------------------------------

def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        yield lineno, s.split()


def parse_mesh(text):
    """Parse the ``nv nt`` / ``x y b`` / ``i j k`` format."""
    lines = list(_data_lines(text))
    if not lines:
        raise MeshError("empty file: missing header", 1)
    lineno, head = lines[0]
    try:
        if len(head) != 2:
            raise ValueError
        nv, nt = int(head[0]), int(head[1])
        if nv < 3 or nt < 1:
            raise ValueError
    except ValueError:
        raise MeshError("malformed header: expected 'nv nt'", lineno) from None
    if len(lines) - 1 < nv + nt:
        raise MeshError(f"expected {nv} vertex and {nt} triangle lines, "
                        f"found {len(lines) - 1}", lines[-1][0])
    if len(lines) - 1 > nv + nt:
        raise MeshError("trailing data after last triangle", lines[1 + nv + nt][0])

    vertices = np.empty((nv, 2))
    boundary = np.empty(nv, dtype=bool)
    for k in range(nv):
        lineno, tok = lines[1 + k]
        try:
            if len(tok) != 3 or tok[2] not in ("0", "1"):
                raise ValueError
            vertices[k] = float(tok[0]), float(tok[1])
            boundary[k] = tok[2] == "1"
        except ValueError:
            raise MeshError("malformed vertex line: expected 'x y b' with b in {0,1}",
                            lineno) from None
    triangles = np.empty((nt, 3), dtype=np.int64)
    tri_lines = []
    for k in range(nt):
        lineno, tok = lines[1 + nv + k]
        tri_lines.append(lineno)
        try:
            if len(tok) != 3:
                raise ValueError
            triangles[k] = [int(s) for s in tok]
        except ValueError:
            raise MeshError("malformed triangle line: expected 'i j k'", lineno) from None
        if triangles[k].min() < 0 or triangles[k].max() >= nv:
            raise MeshError("vertex index out of range", lineno)
        if len(set(triangles[k].tolist())) != 3:
            raise MeshError("degenerate triangle: repeated vertex", lineno)

    mesh = build_mesh(vertices, triangles, boundary, validate=False)
    problems = mesh_problems(mesh)
    if problems:
        t, reason = problems[0]
        raise MeshError(reason, tri_lines[t] if t is not None else None)
    return mesh


def serialize_mesh(mesh):
    out = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    for (x, y), b in zip(mesh.vertices, mesh.boundary):
        out.append(f"{float(x)!r} {float(y)!r} {int(b)}")
    for i, j, k in mesh.triangles:
        out.append(f"{i} {j} {k}")
    return "\n".join(out) + "\n"


def load_mesh(path):
    with open(path) as fh:
        return parse_mesh(fh.read())


def save_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(serialize_mesh(mesh))
