"""Manufactured-solution benchmarks on the unit square.

The sine benchmark uses ``u(x, y, t) = exp(-t) sin(pi x) sin(pi y)``. With
``S = sin(pi x) sin(pi y)`` the extra forcing that makes it exact is

    g = u_t - div(k(u) grad u) - lam f(u) / I(t)**2
      = -u + 2 pi^2 k(u) u - k'(u) |grad u|^2 - lam f(u) / I(t)**2

where ``|grad u|^2 = pi^2 exp(-2t) (cos^2(pi x) sin^2(pi y) + sin^2(pi x) cos^2(pi y))``
and ``I(t)`` is the integral of ``f(u(., t))`` over the square, evaluated by
a 40x40 Gauss-Legendre rule (the integrand is smooth; the rule is exact to
round-off for the presets used here).
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .coefficients import CoefficientModel
from .quadrature import square_gauss

PI = np.pi


@dataclass
class ManufacturedProblem:
    name: str
    coeff: CoefficientModel
    exact: Callable          # u(x, y, t)
    grad: Callable           # (ux, uy)(x, y, t)
    forcing: Callable        # g(x, y, t)
    t_final: float = 0.5

    def u0(self, x, y):
        return self.exact(x, y, 0.0)


def sine_benchmark(k="const:1", f="sigmoid:1,2", lam=1.0, t_final=0.5, name="sine"):
    coeff = CoefficientModel.from_presets(k, f, lam)
    gx, gy, gw = square_gauss(40)
    S_q = np.sin(PI * gx) * np.sin(PI * gy)

    @lru_cache(maxsize=4096)
    def total(t):
        return float(np.dot(gw, coeff.f(np.exp(-t) * S_q)))

    def exact(x, y, t):
        return np.exp(-t) * np.sin(PI * x) * np.sin(PI * y)

    def grad(x, y, t):
        e = np.exp(-t) * PI
        return (e * np.cos(PI * x) * np.sin(PI * y),
                e * np.sin(PI * x) * np.cos(PI * y))

    def forcing(x, y, t):
        u = exact(x, y, t)
        ux, uy = grad(x, y, t)
        return (-u + 2 * PI ** 2 * coeff.k(u) * u
                - coeff.k.deriv(u) * (ux * ux + uy * uy)
                - coeff.lam * coeff.f(u) / total(float(t)) ** 2)

    return ManufacturedProblem(name, coeff, exact, grad, forcing, t_final)


def zero_benchmark(k="const:1", f="sigmoid:1,2", lam=1.0, t_final=0.5):
    """``u = 0`` kept exact by cancelling the constant heating ``lam / f(0)``."""
    coeff = CoefficientModel.from_presets(k, f, lam)
    f0 = float(coeff.f(0.0))

    def exact(x, y, t):
        return np.zeros(np.shape(x))

    def grad(x, y, t):
        return np.zeros(np.shape(x)), np.zeros(np.shape(x))

    def forcing(x, y, t):
        return np.full(np.shape(x), -coeff.lam / f0)

    return ManufacturedProblem("zero", coeff, exact, grad, forcing, t_final)


BENCHMARKS = {
    "standard": lambda: sine_benchmark("const:1", "sigmoid:1,2", 1.0, name="standard"),
    "variable-k": lambda: sine_benchmark("sigmoid:0.5,2.0", "sigmoid:1,2", 1.0,
                                         name="variable-k"),
    "zero": zero_benchmark,
}


def get_benchmark(name):
    try:
        return BENCHMARKS[name]()
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from "
                         f"{', '.join(sorted(BENCHMARKS))}") from None


def poisson_center_series(terms=200):
    """``w(1/2, 1/2)`` for ``-lap w = 1`` on the unit square, zero boundary data.

    Double sine series over odd ``m, n`` of ``16 / (pi^4 m n (m^2 + n^2))``
    times ``sin(m pi/2) sin(n pi/2)``.
    """
    m = np.arange(1, 2 * terms, 2, dtype=float)
    M, N = np.meshgrid(m, m, indexing="ij")
    sign = np.sin(M * PI / 2) * np.sin(N * PI / 2)
    return float(np.sum(16.0 * sign / (PI ** 4 * M * N * (M * M + N * N))))
