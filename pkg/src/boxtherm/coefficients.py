"""Conductivity ``k`` and heating ``f`` models with declared bounds.

Presets are written ``name:args``:

* ``const:v``                   -> ``v``
* ``sigmoid:lo,hi``             -> ``lo + (hi - lo) / (1 + exp(-s))``
* ``bounded-quadratic:a,b,R``   -> ``a + b * min(s**2, R**2)``

Every preset carries its lower/upper bounds and Lipschitz constant, so the
admissibility conditions on ``k`` and ``f`` can be checked by sampling.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit


class HypothesisViolation(ValueError):
    """Coefficient data or a discrete state breaks an admissibility bound."""


@dataclass(frozen=True)
class Preset:
    text: str
    fn: Callable
    deriv: Callable
    lower: float
    upper: float
    lipschitz: float

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=float))


def parse_preset(text):
    name, _, args = text.strip().partition(":")
    name = name.strip().lower()
    try:
        vals = [float(a) for a in args.split(",")] if args.strip() else []
    except ValueError:
        raise ValueError(f"unparsable preset arguments in {text!r}") from None

    if name == "const" and len(vals) == 1:
        (c,) = vals
        return Preset(text, lambda s: np.full(np.shape(s), c),
                      lambda s: np.zeros(np.shape(s)), c, c, 0.0)
    if name == "sigmoid" and len(vals) == 2:
        lo, hi = vals
        if hi < lo:
            raise ValueError(f"sigmoid preset needs lo <= hi: {text!r}")
        span = hi - lo

        def deriv(s):
            e = expit(s)
            return span * e * (1.0 - e)

        return Preset(text, lambda s: lo + span * expit(s), deriv, lo, hi,
                      span / 4.0)
    if name == "bounded-quadratic" and len(vals) == 3:
        a, b, R = vals
        if b < 0 or R < 0:
            raise ValueError(f"bounded-quadratic needs b >= 0 and R >= 0: {text!r}")

        def deriv(s):
            return np.where(np.abs(s) < R, 2.0 * b * s, 0.0)

        return Preset(text, lambda s: a + b * np.minimum(s * s, R * R), deriv,
                      a, a + b * R * R, 2.0 * b * R)
    raise ValueError(f"unknown coefficient preset {text!r}")


@dataclass(frozen=True)
class CoefficientModel:
    """``k``, ``f`` and the source strength ``lam`` with derived constants.

    ``c_k`` bounds ``k`` two-sided (``1/c_k <= k <= c_k``); ``nu``, ``c1``,
    ``c2`` bound ``f`` (``nu <= f(s) <= c1 |s| + c2``); ``lipschitz``
    bounds the sum of both increments.
    """
    k: Preset
    f: Preset
    lam: float

    @classmethod
    def from_presets(cls, k="const:1", f="const:1", lam=1.0, validate=True):
        model = cls(parse_preset(k), parse_preset(f), float(lam))
        if validate:
            model.validate()
        return model

    @property
    def c_k(self):
        return max(self.k.upper, 1.0 / self.k.lower) if self.k.lower > 0 else np.inf

    @property
    def nu(self):
        return self.f.lower

    @property
    def c1(self):
        return 0.0

    @property
    def c2(self):
        return self.f.upper

    @property
    def lipschitz(self):
        return self.k.lipschitz + self.f.lipschitz

    def validate(self, radius=1e3, samples=10_000, seed=0):
        """Sample-check the bounds on ``[-radius, radius]``; raise on failure."""
        if not self.lam > 0:
            raise HypothesisViolation(f"lambda must be positive, got {self.lam}")
        if not self.k.lower > 0:
            raise HypothesisViolation(
                f"k = {self.k.text}: k must be bounded below by a positive constant")
        if not self.f.lower > 0:
            raise HypothesisViolation(
                f"f = {self.f.text}: f must be bounded below by a positive nu")
        s = np.linspace(-radius, radius, samples)
        ks, fs = self.k(s), self.f(s)
        slack = 1e-12
        bad = np.flatnonzero((ks < 1 / self.c_k - slack) | (ks > self.c_k + slack))
        if bad.size:
            i = bad[0]
            raise HypothesisViolation(f"k({s[i]:g}) = {ks[i]:g} outside "
                                      f"[{1 / self.c_k:g}, {self.c_k:g}]")
        bad = np.flatnonzero((fs < self.nu - slack)
                             | (fs > self.c1 * np.abs(s) + self.c2 + slack))
        if bad.size:
            i = bad[0]
            raise HypothesisViolation(f"f({s[i]:g}) = {fs[i]:g} violates "
                                      f"{self.nu:g} <= f <= {self.c1:g}|s| + {self.c2:g}")
        rng = np.random.default_rng(seed)
        a = np.concatenate([s[:-1], rng.uniform(-radius, radius, samples)])
        b = np.concatenate([s[1:], rng.uniform(-radius, radius, samples)])
        lhs = np.abs(self.f(a) - self.f(b)) + np.abs(self.k(a) - self.k(b))
        rhs = self.lipschitz * np.abs(a - b) * (1 + 1e-9) + slack
        bad = np.flatnonzero(lhs > rhs)
        if bad.size:
            i = bad[0]
            raise HypothesisViolation(
                f"Lipschitz bound {self.lipschitz:g} fails at ({a[i]:g}, {b[i]:g})")
        return self
