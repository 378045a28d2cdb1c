import numpy as np
import pytest

from boxtherm.problems import BENCHMARKS, get_benchmark, poisson_center_series


def fd_forcing(bench, x, y, t, h=1e-4):
    """u_t - div(k(u) grad u) - lam f(u) / I^2 from values of u alone."""
    u, k, f, lam = bench.exact, bench.coeff.k, bench.coeff.f, bench.coeff.lam
    ut = (u(x, y, t + h) - u(x, y, t - h)) / (2 * h)

    def flux(x0, y0, x1, y1):
        return k(u(0.5 * (x0 + x1), 0.5 * (y0 + y1), t)) * (u(x1, y1, t) - u(x0, y0, t)) / h

    div = (flux(x, y, x + h, y) - flux(x - h, y, x, y)
           + flux(x, y, x, y + h) - flux(x, y - h, x, y)) / h
    n = 2000
    g = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(g, g)
    total = f(u(X, Y, t)).mean()
    return ut - div - lam * f(u(x, y, t)) / total ** 2


@pytest.mark.parametrize("name", ["standard", "variable-k"])
def test_forcing_matches_finite_differences(name):
    bench = get_benchmark(name)
    rng = np.random.default_rng(0)
    for t in (0.0, 0.13, 0.5):
        x, y = rng.uniform(0.05, 0.95, (2, 6))
        np.testing.assert_allclose(bench.forcing(x, y, t), fd_forcing(bench, x, y, t),
                                   atol=2e-5)


def test_zero_benchmark():
    bench = get_benchmark("zero")
    x = np.linspace(0, 1, 5)
    assert not bench.exact(x, x, 0.3).any()
    f0 = float(bench.coeff.f(0.0))
    np.testing.assert_allclose(bench.forcing(x, x, 0.3), -bench.coeff.lam / f0)


def test_exact_gradient():
    bench = get_benchmark("standard")
    x, y, t, h = 0.3, 0.7, 0.2, 1e-6
    gx, gy = bench.grad(x, y, t)
    assert gx == pytest.approx((bench.exact(x + h, y, t) - bench.exact(x - h, y, t)) / (2 * h),
                               abs=1e-8)
    assert gy == pytest.approx((bench.exact(x, y + h, t) - bench.exact(x, y - h, t)) / (2 * h),
                               abs=1e-8)


def test_registry():
    assert {"standard", "variable-k", "zero"} <= set(BENCHMARKS)
    with pytest.raises(ValueError, match="unknown benchmark"):
        get_benchmark("nope")


def test_poisson_series():
    # converged digits of the classical value 0.0736713...
    assert poisson_center_series(400) == pytest.approx(0.0736713532, abs=1e-9)
