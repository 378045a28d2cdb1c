"""Backward-Euler time stepping of the box scheme with Picard iteration.

Each time step solves, for the unknown ``w`` on the interior vertices,

    (D/tau + A(w)) w = (D/tau) u_prev + b(w) + F

by freezing ``A`` (diffusion with ``k`` evaluated at the iterate) and ``b``
(nonlocal heating) at the previous Picard iterate. ``D`` is the lumped mass
(box areas) and ``F`` an optional extra load.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .assembly import (ReducedPattern, assemble_lumped_mass, assemble_nonlocal_source,
                       edge_weights)
from .coefficients import HypothesisViolation
from .dual import build_dual
from .operators import l2_project

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """A linear or nonlinear iteration did not converge."""

    def __init__(self, msg, residual=None, diagnostics=None):
        super().__init__(msg)
        self.residual = residual
        self.diagnostics = diagnostics


class CGResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float


def cg_solve(A, rhs, tol=1e-12, maxiter=None, x0=None):
    """Conjugate gradients for SPD ``A``; stops at ``|Ax - b| <= tol |b|``."""
    A = sp.csr_matrix(A)
    A.sort_indices()
    b = np.ascontiguousarray(rhs, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"operator shape {A.shape} does not match rhs length {n}")
    maxiter = 10 * n + 100 if maxiter is None else int(maxiter)
    x0 = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    x, its, res = _kernels.cg_csr(A.indptr.astype(np.int64), A.indices.astype(np.int64),
                                  A.data.astype(float), b, x0, tol, maxiter)
    if its < 0:
        raise SolverError(f"CG did not converge in {maxiter} iterations "
                          f"(residual {res:.3e}, |b| {np.linalg.norm(b):.3e})",
                          residual=float(res))
    return CGResult(x, int(its), float(res))


@dataclass
class SolverConfig:
    tau: float = 0.01
    t_final: float = 0.1
    picard_tol: float = 1e-10
    picard_max_iters: int = 30
    cg_tol: float = 1e-12
    cg_max_iters: Optional[int] = None
    tau_backoff: float = 0.5
    max_backoffs: int = 10
    snapshot_stride: int = 1
    integral_rule: str = "lumped"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not (self.picard_tol > 0 and self.cg_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.tau_backoff < 1:
            raise ValueError("tau_backoff must lie in (0, 1)")
        if self.picard_max_iters < 1 or self.snapshot_stride < 1:
            raise ValueError("picard_max_iters and snapshot_stride must be >= 1")


@dataclass
class StepDiagnostics:
    t: float
    tau: float
    picard_iterations: int
    cg_iterations: list
    integrals: list
    source_max: float
    ratios: list
    backoffs: int = 0

    @property
    def contraction(self):
        """Largest observed ``|d_{m+1}| / |d_m|`` (0 if undefined)."""
        return max(self.ratios) if self.ratios else 0.0


class Problem:
    """Mesh, coefficients and data of one run; caches the fixed structures."""

    def __init__(self, mesh, coeff, u0=None, forcing=None, dual=None,
                 integral_rule="lumped"):
        self.mesh = mesh
        self.dual = dual if dual is not None else build_dual(mesh)
        self.coeff = coeff
        self.u0 = u0
        self.forcing = forcing
        self.integral_rule = integral_rule
        self.pattern = ReducedPattern(mesh)
        self.interior = mesh.interior
        self.lumped = assemble_lumped_mass(self.dual)

    def norm_0h(self, v):
        return float(np.sqrt(np.dot(self.dual.box_area, v * v)))

    def forcing_load(self, t):
        """Lumped load of the extra forcing at time ``t`` (None if absent)."""
        if self.forcing is None:
            return None
        x, y = self.mesh.vertices.T
        g = np.broadcast_to(self.forcing(x, y, t), x.shape)
        load = self.dual.box_area * g
        load[self.mesh.boundary] = 0.0
        return load

    def operator(self, u, tau):
        """``D/tau + A(u)`` on the interior vertices."""
        return self.pattern.matrix(edge_weights(self.dual, self.coeff, u),
                                   diag=self.lumped / tau)


class PicardResult(NamedTuple):
    w: np.ndarray
    cg_iterations: int
    integral: float
    source_max: float


def picard_step(problem, u_prev, u_iter, tau, cfg, extra_forcing=None):
    """One application of the frozen-coefficient map: returns ``w = G(u_iter)``."""
    idx = problem.interior
    src, integral = assemble_nonlocal_source(problem.dual, u_iter, problem.coeff,
                                             problem.integral_rule)
    rhs = problem.lumped / tau * u_prev[idx] + src[idx]
    if extra_forcing is not None:
        rhs = rhs + np.asarray(extra_forcing)[idx]
    A = problem.operator(u_iter, tau)
    res = cg_solve(A, rhs, tol=cfg.cg_tol, maxiter=cfg.cg_max_iters, x0=u_iter[idx])
    w = np.zeros(problem.mesh.n_vertices)
    w[idx] = res.x
    return PicardResult(w, res.iterations, integral, float(np.abs(src).max(initial=0.0)))


def fixed_point_residual(problem, w, u_prev, tau, extra_forcing=None):
    """Euclidean residual of the nonlinear step equation at ``w``."""
    idx = problem.interior
    src, _ = assemble_nonlocal_source(problem.dual, w, problem.coeff, problem.integral_rule)
    r = problem.operator(w, tau) @ w[idx] - problem.lumped / tau * u_prev[idx] - src[idx]
    if extra_forcing is not None:
        r = r - np.asarray(extra_forcing)[idx]
    return float(np.linalg.norm(r))


def _picard(problem, u_prev, t, tau, cfg):
    load = problem.forcing_load(t + tau)
    w_old = u_prev
    deltas, cg_its, integrals, ratios = [], [], [], []
    source_max = 0.0
    for m in range(cfg.picard_max_iters + 1):
        step = picard_step(problem, u_prev, w_old, tau, cfg, load)
        w = step.w
        if not np.all(np.isfinite(w)):
            return None, (cg_its, integrals, ratios, source_max, m)
        cg_its.append(step.cg_iterations)
        integrals.append(step.integral)
        source_max = max(source_max, step.source_max)
        d = problem.norm_0h(w - w_old)
        if deltas:
            ratios.append(d / deltas[-1] if deltas[-1] > 0 else 0.0)
        deltas.append(d)
        # the first increment is the change over the time step, not a Picard
        # correction; convergence is judged from the second one on
        if m >= 1 and d <= cfg.picard_tol:
            return w, (cg_its, integrals, ratios, source_max, m)
        w_old = w
    return None, (cg_its, integrals, ratios, source_max, cfg.picard_max_iters)


def advance(problem, u_prev, t, tau, cfg):
    """Take one step from ``t``; shrinks ``tau`` on Picard failure.

    Returns ``(u_next, StepDiagnostics)``; the accepted step is ``diag.tau``.
    """
    backoffs = 0
    while True:
        try:
            w, (cg_its, integrals, ratios, smax, its) = _picard(problem, u_prev, t, tau, cfg)
        except SolverError as exc:
            log.debug("linear solve failed at t=%g tau=%g: %s", t, tau, exc)
            w, cg_its, integrals, ratios, smax, its = None, [], [], [], 0.0, 0
        if w is not None:
            return w, StepDiagnostics(t + tau, tau, its, cg_its, integrals, smax,
                                      ratios, backoffs)
        if backoffs >= cfg.max_backoffs:
            diag = StepDiagnostics(t + tau, tau, its, cg_its, integrals, smax, ratios,
                                   backoffs)
            raise SolverError(f"Picard iteration failed at t={t:g} after "
                              f"{backoffs} step reductions (tau={tau:g})",
                              diagnostics=diag)
        backoffs += 1
        tau *= cfg.tau_backoff
        log.info("Picard failed at t=%g, reducing tau to %g", t, tau)


@dataclass
class Trajectory:
    mesh: object
    tau: float
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    def add(self, t, u):
        self.times.append(float(t))
        self.fields.append(np.array(u, dtype=float))

    def write_csv(self, path_or_file):
        """Long-form ``t,vertex_index,x,y,value`` rows."""
        out = ["t,vertex_index,x,y,value\n"]
        xs = self.mesh.vertices[:, 0].tolist()
        ys = self.mesh.vertices[:, 1].tolist()
        for t, u in zip(self.times, self.fields):
            for i, val in enumerate(u.tolist()):
                out.append(f"{t!r},{i},{xs[i]!r},{ys[i]!r},{val!r}\n")
        text = "".join(out)
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)


def initial_field(problem, u0=None):
    u0 = problem.u0 if u0 is None else u0
    if u0 is None:
        return np.zeros(problem.mesh.n_vertices)
    if callable(u0):
        return l2_project(problem.mesh, u0, dirichlet=True)
    u = np.array(u0, dtype=float)
    u[problem.mesh.boundary] = 0.0
    return u


def solve_transient(problem, cfg, t0=0.0, callback: Optional[Callable] = None):
    """March from ``t0`` to ``cfg.t_final`` starting at the projected initial datum."""
    u = initial_field(problem)
    traj = Trajectory(problem.mesh, cfg.tau)
    traj.add(t0, u)
    t, tau, k = t0, cfg.tau, 0
    eps = 1e-12 * max(1.0, abs(cfg.t_final))
    while t < cfg.t_final - eps:
        step = min(tau, cfg.t_final - t)
        u, diag = advance(problem, u, t, step, cfg)
        if diag.backoffs:
            tau = diag.tau
        t = cfg.t_final if abs(t + diag.tau - cfg.t_final) <= eps else t + diag.tau
        k += 1
        traj.steps.append(diag)
        if callback is not None:
            callback(t, u, diag)
        if k % cfg.snapshot_stride == 0 or t >= cfg.t_final - eps:
            traj.add(t, u)
    return traj


def steady_state(problem, cfg=None):
    """Solve ``A(u) u = b(u)`` by Picard iteration (no time derivative)."""
    cfg = cfg or SolverConfig()
    idx = problem.interior
    u = np.zeros(problem.mesh.n_vertices)
    for _ in range(cfg.picard_max_iters + 1):
        src, _ = assemble_nonlocal_source(problem.dual, u, problem.coeff,
                                          problem.integral_rule)
        A = problem.pattern.matrix(edge_weights(problem.dual, problem.coeff, u))
        res = cg_solve(A, src[idx], tol=cfg.cg_tol, maxiter=cfg.cg_max_iters)
        w = np.zeros_like(u)
        w[idx] = res.x
        if problem.norm_0h(w - u) <= cfg.picard_tol:
            return w
        u = w
    raise SolverError("steady Picard iteration did not converge")


__all__ = [
    "CGResult", "HypothesisViolation", "PicardResult", "Problem", "SolverConfig",
    "SolverError", "StepDiagnostics", "Trajectory", "advance", "cg_solve",
    "fixed_point_residual", "initial_field", "picard_step", "solve_transient",
    "steady_state",
]
