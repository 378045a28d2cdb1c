import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxtherm.coefficients import CoefficientModel, HypothesisViolation, parse_preset


def test_sigmoid_k():
    m = CoefficientModel.from_presets(k="sigmoid:0.5,2.0")
    assert (m.k.lower, m.k.upper) == (0.5, 2.0)
    assert m.c_k == 2.0
    assert m.k(0.0) == pytest.approx(1.25)


def test_const_f():
    m = CoefficientModel.from_presets(f="const:1.0")
    assert float(m.f(3.7)) == 1.0
    assert (m.nu, m.c1, m.c2) == (1.0, 0.0, 1.0)


@pytest.mark.parametrize("k, f, lam, what", [
    ("const:-1", "const:1", 1.0, "k must be"),
    ("const:1", "const:0", 1.0, "f must be"),
    ("const:1", "sigmoid:-1,1", 1.0, "f must be"),
    ("const:1", "const:1", 0.0, "lambda"),
])
def test_rejected(k, f, lam, what):
    with pytest.raises(HypothesisViolation, match=what):
        CoefficientModel.from_presets(k, f, lam)


@pytest.mark.parametrize("text", ["nope:1", "const", "const:a", "sigmoid:2,1",
                                  "bounded-quadratic:1,-1,2"])
def test_bad_preset(text):
    with pytest.raises(ValueError):
        parse_preset(text)


def test_bounded_quadratic():
    p = parse_preset("bounded-quadratic:1,0.5,2")
    np.testing.assert_allclose(p([0.0, 1.0, 3.0, -10.0]), [1.0, 1.5, 3.0, 3.0])
    assert (p.lower, p.upper, p.lipschitz) == (1.0, 3.0, 2.0)


@given(st.floats(0.1, 5), st.floats(0, 5), st.floats(-50, 50), st.floats(-50, 50))
def test_sigmoid_bounds_and_lipschitz(lo, span, a, b):
    p = parse_preset(f"sigmoid:{lo!r},{lo + span!r}")
    va, vb = float(p(a)), float(p(b))
    assert p.lower - 1e-12 <= va <= p.upper + 1e-12
    assert abs(va - vb) <= p.lipschitz * abs(a - b) + 1e-12


@given(st.floats(-30, 30))
def test_sigmoid_derivative(s):
    p = parse_preset("sigmoid:0.5,2.0")
    eps = 1e-6
    fd = (float(p(s + eps)) - float(p(s - eps))) / (2 * eps)
    assert float(p.deriv(s)) == pytest.approx(fd, abs=1e-8)
