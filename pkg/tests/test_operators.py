from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxtherm.dual import build_dual
from boxtherm.mesh import generate_structured_mesh, structured_level
from boxtherm.operators import (box_interpolation_error, compute_norms, flux_projection,
                                function_errors, l2_project, lagrange_interpolate,
                                random_s0_field, w1inf_norm)
from boxtherm.verification import fit_rate, projection_study


def sine(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


class TestInterpolation:
    def test_zero(self, mesh_n2):
        assert not lagrange_interpolate(mesh_n2, lambda x, y: 0 * x).any()

    def test_linear(self, mesh_n2):
        v = lagrange_interpolate(mesh_n2, lambda x, y: x + y)
        np.testing.assert_array_equal(v, mesh_n2.vertices.sum(axis=1))

    def test_bubble_center(self, mesh_n2):
        v = lagrange_interpolate(mesh_n2, lambda x, y: x * (1 - x) * y * (1 - y))
        assert v[4] == 0.0625


class TestL2Projection:
    def test_hat_is_fixed(self, mesh_n2):
        hat = np.zeros(9)
        hat[4] = 1.0

        def f(x, y):
            # closed form of the centre hat for south-west/north-east diagonals
            dx, dy = x - 0.5, y - 0.5
            r = np.maximum(np.maximum(np.abs(dx), np.abs(dy)), np.abs(dx - dy))
            return np.maximum(0.0, 1.0 - 2.0 * r)

        np.testing.assert_allclose(lagrange_interpolate(mesh_n2, f), hat)
        np.testing.assert_allclose(l2_project(mesh_n2, f,
                                              dirichlet=True), hat, atol=1e-12)

    def test_ones_without_constraint(self):
        m = generate_structured_mesh(1)
        # exact rational oracle: M x = b with b_i = integral of phi_i
        area = [Fraction(1, 2)] * 2
        M = [[Fraction(0)] * 4 for _ in range(4)]
        b = [Fraction(0)] * 4
        for t, a in zip(m.triangles.tolist(), area):
            for i in t:
                b[i] += a / 3
                for j in t:
                    M[i][j] += a / 6 if i == j else a / 12
        x = gauss_solve(M, b)
        assert x == [1, 1, 1, 1]
        np.testing.assert_allclose(l2_project(m, lambda x, y: np.ones_like(x)), 1.0,
                                   atol=1e-12)

    def test_boundary_rows_zero(self):
        m = structured_level(3)
        p = l2_project(m, lambda x, y: 1 + x * y, dirichlet=True)
        assert not p[m.boundary].any()


def gauss_solve(A, b):
    n = len(b)
    A = [row[:] + [bi] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [A[i][n] / A[i][i] for i in range(n)]


class TestFluxProjection:
    @pytest.mark.parametrize("a", [1.0, 3.5])
    def test_affine_exact(self, a):
        m = structured_level(3)
        u = lambda x, y: 2 + x - 3 * y  # noqa: E731
        grad = lambda x, y: (np.ones_like(x), -3 * np.ones_like(x))  # noqa: E731
        q = flux_projection(build_dual(m), a, u, grad)
        np.testing.assert_allclose(q, lagrange_interpolate(m, u), atol=1e-12)

    def test_variable_weight_affine_exact(self):
        m = structured_level(3)
        u = lambda x, y: x + y  # noqa: E731
        grad = lambda x, y: (np.ones_like(x), np.ones_like(x))  # noqa: E731
        q = flux_projection(build_dual(m), lambda x, y: 1 + x * y, u, grad)
        np.testing.assert_allclose(q, lagrange_interpolate(m, u), atol=1e-12)

    def test_boundary_values_are_interpolated(self):
        m = structured_level(3)
        u = lambda x, y: np.exp(x) * (1 + y)  # noqa: E731
        grad = lambda x, y: (np.exp(x) * (1 + y), np.exp(x))  # noqa: E731
        q = flux_projection(build_dual(m), 1.0, u, grad)
        np.testing.assert_array_equal(q[m.boundary], lagrange_interpolate(m, u)[m.boundary])


def test_projection_rates():
    rows, rates = projection_study((2, 3, 4, 5))
    assert 1.8 <= rates["l2_P"] <= 2.2
    assert rates["h1_Q"] >= 0.9
    w = [r["w1inf_Q"] for r in rows]
    assert max(w) / min(w) <= 1.5


class TestNorms:
    def test_zero(self, mesh_n2):
        nb = compute_norms(build_dual(mesh_n2), np.zeros(9))
        assert (nb.l2, nb.h1_semi, nb.norm_0h, nb.norm_1h) == (0, 0, 0, 0)

    def test_center_hat_segments(self, mesh_n2):
        d = build_dual(mesh_n2)
        v = np.zeros(9)
        v[4] = 1.0
        # brute force: collect every (sorted) vertex pair seen as a triangle side
        segs = set()
        for t in mesh_n2.triangles.tolist():
            for i in range(3):
                segs.add(tuple(sorted((t[i], t[(i + 1) % 3]))))
        oracle = sum((v[a] - v[b]) ** 2 for a, b in segs)
        assert oracle == 6.0        # 4 axis neighbours + 2 along the diagonal
        assert compute_norms(d, v).norm_1h ** 2 == pytest.approx(oracle, abs=1e-14)
        assert compute_norms(d, v).norm_0h == pytest.approx(0.5, abs=1e-15)

    def test_constant(self, mesh_n2):
        nb = compute_norms(build_dual(mesh_n2), np.full(9, 2.0))
        assert nb.l2 == pytest.approx(2.0)
        assert nb.norm_0h == pytest.approx(2.0)
        assert nb.h1_semi == pytest.approx(0.0, abs=1e-7)

    def test_equivalence_band(self):
        rng = np.random.default_rng(1)
        ratios = []
        for lv in range(1, 6):
            d = build_dual(structured_level(lv))
            for _ in range(20):
                nb = compute_norms(d, random_s0_field(d.mesh, rng))
                ratios.append(nb.norm_0h / nb.l2)
        assert max(ratios) / min(ratios) <= 10

    @given(st.integers(1, 8), st.integers(0, 1000), st.floats(-3, 3))
    def test_homogeneity(self, n, seed, c):
        d = build_dual(generate_structured_mesh(n))
        v = random_s0_field(d.mesh, np.random.default_rng(seed))
        a, b = compute_norms(d, v), compute_norms(d, c * v)
        for name in ("l2", "h1_semi", "norm_0h", "norm_1h"):
            assert getattr(b, name) == pytest.approx(abs(c) * getattr(a, name), abs=1e-12)


def test_function_errors_of_interpolant_vanish_for_linear():
    m = structured_level(2)
    u = lambda x, y: 1 + 2 * x + y  # noqa: E731
    g = lambda x, y: (2 + 0 * x, 1 + 0 * x)  # noqa: E731
    l2, semi = function_errors(m, lagrange_interpolate(m, u), u, g)
    assert l2 < 1e-14 and semi < 1e-13


def test_w1inf_hat(mesh_n2):
    v = np.zeros(9)
    v[4] = 1.0
    assert w1inf_norm(mesh_n2, v) == pytest.approx(1.0 + 2.0 ** 1.5)


def test_box_interpolation_error_rate():
    errs, hs = [], []
    for lv in range(2, 6):
        m = structured_level(lv)
        d = build_dual(m)
        errs.append(box_interpolation_error(d, lagrange_interpolate(m, sine)))
        hs.append(m.h)
    assert fit_rate(hs, errs) == pytest.approx(1.0, abs=0.1)


def test_box_interpolation_error_of_constant(mesh_n2):
    assert box_interpolation_error(build_dual(mesh_n2), np.full(9, 3.0)) == 0.0
