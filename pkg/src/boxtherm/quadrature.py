"""Triangle and segment quadrature rules."""
import numpy as np

_A = (6.0 - np.sqrt(15.0)) / 21.0
_B = (6.0 + np.sqrt(15.0)) / 21.0
_WA = (155.0 - np.sqrt(15.0)) / 1200.0
_WB = (155.0 + np.sqrt(15.0)) / 1200.0

# degree -> (barycentric points (k, 3), weights (k,) summing to 1)
TRIANGLE_RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    2: (np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]),
        np.full(3, 1 / 3)),
    5: (np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [_A, _A, 1 - 2 * _A], [_A, 1 - 2 * _A, _A], [1 - 2 * _A, _A, _A],
        [_B, _B, 1 - 2 * _B], [_B, 1 - 2 * _B, _B], [1 - 2 * _B, _B, _B],
    ]), np.array([9 / 40, _WA, _WA, _WA, _WB, _WB, _WB])),
}


def triangle_rule(degree):
    """Cheapest tabulated rule exact for polynomials of ``degree``."""
    for d in sorted(TRIANGLE_RULES):
        if d >= degree:
            return TRIANGLE_RULES[d]
    raise ValueError(f"no triangle rule of degree {degree} (max 5)")


def triangle_points(mesh, degree):
    """Physical quadrature points (nt, k, 2) and weights (nt, k)."""
    bary, w = triangle_rule(degree)
    corners = mesh.vertices[mesh.triangles]          # (nt, 3, 2)
    pts = np.einsum("kj,tjd->tkd", bary, corners)
    weights = np.abs(mesh.areas)[:, None] * w[None, :]
    return pts, weights, bary


def integrate(mesh, fn, degree=5):
    """Integral over the mesh of a vectorized ``fn(x, y)``."""
    pts, w, _ = triangle_points(mesh, degree)
    return float(np.sum(w * fn(pts[..., 0], pts[..., 1])))


def segment_midpoints(a, b, n):
    """Composite midpoint rule with ``n`` cells on segments ``a -> b``.

    Returns points (m, n, 2) and weights (m, n).
    """
    s = (np.arange(n) + 0.5) / n
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    length = np.linalg.norm(b - a, axis=1)
    return pts, np.repeat(length[:, None] / n, n, axis=1)


def square_gauss(n=32):
    """Tensor Gauss-Legendre rule on the unit square: x, y, w (flat)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    return X.ravel(), Y.ravel(), np.outer(w, w).ravel()
