"""Oracles, space-time error norms and refinement studies."""
import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import (assemble_consistent_mass, assemble_flux_matrix, edge_weights,
                       flux_matrix_full, p1_stiffness, restrict)
from .coefficients import CoefficientModel
from .dual import build_dual, orthogonality_residual
from .mesh import generate_structured_mesh, prolongation_matrix, refine_uniform, structured_level
from .operators import (box_interpolation_error, compute_norms, flux_projection,
                        function_errors, jump_identity_residual, l2_project,
                        lagrange_interpolate, random_s0_field, w1inf_norm)
from .problems import get_benchmark
from .solver import Problem, SolverConfig, solve_transient

# fixed pass thresholds
RATE_THRESHOLD = 0.9
BAND_LIMIT = 10.0
IDENTITY_TOL = 1e-12
# a norm whose errors all sit below this is exact up to solver tolerance
ERROR_FLOOR = 1e-8


def fem_stiffness_oracle(mesh):
    """P1 stiffness over all vertices by the cotangent formula."""
    v, t = mesh.vertices, mesh.triangles
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        a = v[i] - v[t[:, k]]
        b = v[j] - v[t[:, k]]
        cot = (a * b).sum(1) / np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        half = 0.5 * cot
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-half, -half, half, half]
    n = mesh.n_vertices
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def fit_rate(h, err):
    """Least-squares slope of ``log err`` against ``log h``."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if len(h) < 2 or np.any(err <= 0):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


# -- error norms --------------------------------------------------------------

@dataclass
class ErrorEntry:
    level: int
    h: float
    tau: float
    err_linf_l2: float
    err_l2_h1: float
    err_linf_h1: float


def _time_weights(times, tau):
    times = np.asarray(times, dtype=float)
    return np.diff(np.concatenate([[times[0] - tau], times]))


def compute_error_norms(numeric, exact=None, reference=None, prolong=None, level=0):
    """Space-time errors of a trajectory.

    Either ``exact=(u, grad_u)`` with ``u(x, y, t)``, or a ``reference``
    trajectory on a finer nested mesh together with the ``prolong`` matrix
    mapping coarse nodal values onto it.
    """
    mesh = numeric.mesh
    l2s, h1s = [], []
    if exact is not None:
        u, grad_u = exact
        for t, v in zip(numeric.times, numeric.fields):
            l2, semi = function_errors(mesh, v, lambda x, y: u(x, y, t),
                                       lambda x, y: grad_u(x, y, t))
            l2s.append(l2)
            h1s.append(np.hypot(l2, semi))
    elif reference is not None:
        if prolong is None:
            raise ValueError("a prolongation matrix is required for reference errors")
        ref_times = np.asarray(reference.times)
        M = assemble_consistent_mass(reference.mesh)
        K = p1_stiffness(reference.mesh)
        for t, v in zip(numeric.times, numeric.fields):
            k = np.flatnonzero(np.abs(ref_times - t) <= 1e-9 * max(1.0, abs(t)))
            if not len(k):
                raise ValueError(f"reference has no snapshot at t={t:.12g}")
            e = prolong @ v - reference.fields[k[0]]
            l2 = float(np.sqrt(max(e @ (M @ e), 0.0)))
            semi = float(np.sqrt(max(e @ (K @ e), 0.0)))
            l2s.append(l2)
            h1s.append(np.hypot(l2, semi))
    else:
        raise ValueError("need an exact solution or a reference trajectory")
    w = _time_weights(numeric.times, numeric.tau)
    h1s = np.asarray(h1s)
    return ErrorEntry(level=level, h=mesh.h, tau=numeric.tau,
                      err_linf_l2=float(np.max(l2s)),
                      err_l2_h1=float(np.sqrt(np.sum(w * h1s ** 2))),
                      err_linf_h1=float(np.max(h1s)))


NORMS = ("err_linf_l2", "err_l2_h1", "err_linf_h1")


@dataclass
class ErrorReport:
    name: str
    entries: list = field(default_factory=list)

    @property
    def rates(self):
        h = [e.h for e in self.entries]
        return {n: fit_rate(h, [getattr(e, n) for e in self.entries]) for n in NORMS}

    def status(self, norm, threshold=RATE_THRESHOLD):
        if all(getattr(e, norm) <= ERROR_FLOOR for e in self.entries):
            return True
        return self.rates[norm] >= threshold

    def passed(self, norms=NORMS, threshold=RATE_THRESHOLD):
        return all(self.status(n, threshold) for n in norms)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "h", "tau", *NORMS])
        for e in self.entries:
            w.writerow([e.level, repr(e.h), repr(e.tau),
                        *(repr(getattr(e, n)) for n in NORMS)])
        r = self.rates
        w.writerow(["# rates", "", "", *(f"{r[n]:.6f}" for n in NORMS)])
        w.writerow(["# status", "", "", *("PASS" if self.status(n) else "FAIL"
                                          for n in NORMS)])
        return buf.getvalue()


def _threads():
    try:
        return max(1, int(os.environ.get("BOXTHERM_THREADS", "1")))
    except ValueError:
        return 1


def _map_levels(fn, levels, threads=None):
    threads = threads or _threads()
    if threads == 1 or len(levels) == 1:
        return [fn(lv) for lv in levels]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, levels))


def run_convergence_study(benchmark="standard", levels=(2, 3, 4, 5), tau0=0.1,
                          t_final=None, cfg=None, threads=None):
    """Manufactured-solution study with ``tau = tau0 * h`` on structured levels."""
    bench = get_benchmark(benchmark) if isinstance(benchmark, str) else benchmark
    t_final = bench.t_final if t_final is None else t_final
    base = cfg or SolverConfig()

    def one(level):
        mesh = structured_level(level)
        n_steps = int(np.ceil(t_final / (tau0 * mesh.h) - 1e-9))
        c = SolverConfig(**{**base.__dict__, "tau": t_final / n_steps,
                            "t_final": t_final, "snapshot_stride": 1})
        prob = Problem(mesh, bench.coeff, u0=bench.u0, forcing=bench.forcing)
        traj = solve_transient(prob, c)
        return compute_error_norms(traj, exact=(bench.exact, bench.grad), level=level), traj

    results = _map_levels(one, list(levels), threads)
    report = ErrorReport(bench.name, [r[0] for r in results])
    report.trajectories = [r[1] for r in results]
    return report


def nested_hierarchy(top_level, base_n=2):
    """Meshes for levels ``1..top_level`` by refinement, with prolongations.

    Level 1 is the structured mesh with ``base_n`` cells per side.
    Returns ``(meshes, prolong)`` where ``prolong[l]`` maps level ``l`` to
    level ``l + 1``.
    """
    meshes = {1: generate_structured_mesh(base_n)}
    prolong = {}
    for lv in range(1, top_level):
        prolong[lv] = prolongation_matrix(meshes[lv])
        meshes[lv + 1] = refine_uniform(meshes[lv])
    return meshes, prolong


def richardson_study(levels=(2, 3, 4, 5), ref_level=7, k="const:1", f="const:1",
                     lam=1.0, t_final=0.2, n_snapshots=10, tau0=0.1, cfg=None,
                     threads=None):
    """Unforced problem from zero data; errors against a fine-level solution.

    Each level uses the largest step ``<= tau0 * h`` that divides the
    snapshot interval, so all levels share the snapshot times.
    """
    coeff = CoefficientModel.from_presets(k, f, lam)
    meshes, prolong = nested_hierarchy(ref_level)
    base = cfg or SolverConfig()
    interval = t_final / n_snapshots

    def run(level):
        mesh = meshes[level]
        sub = int(np.ceil(interval / (tau0 * mesh.h) - 1e-9))
        c = SolverConfig(**{**base.__dict__, "tau": interval / sub, "t_final": t_final,
                            "snapshot_stride": sub})
        return solve_transient(Problem(mesh, coeff), c)

    all_levels = list(levels) + [ref_level]
    trajs = dict(zip(all_levels, _map_levels(run, all_levels, threads)))
    ref = trajs[ref_level]
    report = ErrorReport(f"richardson-ref{ref_level}")
    for lv in levels:
        P = sp.identity(meshes[lv].n_vertices, format="csr")
        for j in range(lv, ref_level):
            P = prolong[j] @ P
        report.entries.append(compute_error_norms(trajs[lv], reference=ref, prolong=P,
                                                  level=lv))
    report.trajectories = trajs
    report.meshes = meshes
    return report


# -- projection studies -------------------------------------------------------

def _sine():
    def u(x, y):
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    def grad(x, y):
        return (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))
    return u, grad


def projection_study(levels=(2, 3, 4, 5)):
    """Errors of the L2 and flux projections of ``sin(pi x) sin(pi y)``."""
    u, grad = _sine()
    rows = []
    for lv in levels:
        mesh = structured_level(lv)
        dual = build_dual(mesh)
        ph = l2_project(mesh, u, dirichlet=True)
        qh = flux_projection(dual, 1.0, u, grad)
        l2_p, _ = function_errors(mesh, ph, u, grad)
        l2_q, semi_q = function_errors(mesh, qh, u, grad)
        rows.append({"level": lv, "h": mesh.h, "l2_P": l2_p,
                     "h1_Q": float(np.hypot(l2_q, semi_q)), "w1inf_Q": w1inf_norm(mesh, qh)})
    h = [r["h"] for r in rows]
    rates = {"l2_P": fit_rate(h, [r["l2_P"] for r in rows]),
             "h1_Q": fit_rate(h, [r["h1_Q"] for r in rows])}
    return rows, rates


# -- invariant suite ----------------------------------------------------------

@dataclass
class Check:
    name: str
    level: object
    value: float
    limit: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} level={self.level} value={self.value:.3e} limit={self.limit:.3e}"


def _band(values):
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min())


def invariant_suite(levels=(1, 2, 3, 4, 5), n_random=100, seed=0):
    """Geometry/operator identities per level plus cross-level band checks."""
    rng = np.random.default_rng(seed)
    checks = []
    ratio_1h, ratio_0h, interp, bounded = [], [], [], []
    k_var = CoefficientModel.from_presets("sigmoid:0.5,2.0", "const:1", 1.0)
    k_one = CoefficientModel.from_presets("const:1", "const:1", 1.0)
    u, _ = _sine()
    for lv in levels:
        mesh = structured_level(lv)
        dual = build_dual(mesh)
        area = mesh.domain_area
        checks.append(Check("partition", lv, abs(dual.box_area.sum() - area) / area,
                            IDENTITY_TOL, abs(dual.box_area.sum() - area) <= IDENTITY_TOL * area))
        checks.append(Check("box_positive", lv, float(dual.box_area.min()), 0.0,
                            bool(dual.box_area.min() > 0)))
        orth = orthogonality_residual(dual)
        checks.append(Check("orthogonality", lv, orth, IDENTITY_TOL, orth <= IDENTITY_TOL))

        fields = [random_s0_field(mesh, rng) for _ in range(n_random)]
        jump = max(jump_identity_residual(dual, v) for v in fields)
        checks.append(Check("jump_identity", lv, jump, IDENTITY_TOL, jump <= IDENTITY_TOL))
        for v in fields:
            nb = compute_norms(dual, v)
            if nb.h1_semi > 0:
                ratio_1h.append(nb.norm_1h / nb.h1_semi)
                ratio_0h.append(nb.norm_0h / nb.l2)

        A1 = flux_matrix_full(dual, edge_weights(dual, k_one, np.zeros(mesh.n_vertices)))
        diff = abs(A1 - fem_stiffness_oracle(mesh)).max()
        checks.append(Check("fem_equivalence", lv, float(diff), IDENTITY_TOL,
                            diff <= IDENTITY_TOL))

        state = rng.uniform(-5, 5, mesh.n_vertices)
        state[mesh.boundary] = 0.0
        A = assemble_flux_matrix(dual, k_var, state)
        if lv <= 3:
            lam_min = float(np.linalg.eigvalsh(A.toarray()).min())
        else:
            X = rng.standard_normal((A.shape[0], 1000))
            lam_min = float(np.min(np.einsum("ij,ij->j", X, A @ X)))
        checks.append(Check("spd", lv, lam_min, 0.0, lam_min > 0))

        M = restrict(assemble_consistent_mass(mesh), mesh)
        K = restrict(p1_stiffness(mesh), mesh)
        X = rng.standard_normal((A.shape[0], 20))
        Y = rng.standard_normal((A.shape[0], 20))
        h1 = lambda Z: np.sqrt(np.einsum("ij,ij->j", Z, (M + K) @ Z))  # noqa: E731
        quot = np.abs(np.einsum("ij,ij->j", X, A @ Y)) / (h1(X) * h1(Y))
        quot_xx = np.einsum("ij,ij->j", X, A @ X) / h1(X) ** 2
        bounded.append(max(quot.max(), quot_xx.max()))

        vi = lagrange_interpolate(mesh, u)
        nb = compute_norms(dual, vi)
        interp.append(box_interpolation_error(dual, vi) / (mesh.h * nb.h1))

    for name, vals in (("norm_equivalence_1h", ratio_1h), ("norm_equivalence_0h", ratio_0h),
                       ("interpolation_error", interp), ("flux_boundedness", bounded)):
        b = _band(vals)
        checks.append(Check(name, "all", b, BAND_LIMIT, b <= BAND_LIMIT))
    return checks
