"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--levels 4..7] [--repeat 5]

Each kernel is called once before timing so numba compilation is excluded.
A full time step (the Picard solve) is also timed with each path via the
``BOXTHERM_NUMBA`` switch, which is read at call time.
"""
import argparse
import os
import time

import numpy as np

from boxtherm import _kernels as K
from boxtherm.cli import parse_levels
from boxtherm.coefficients import CoefficientModel
from boxtherm.dual import build_dual
from boxtherm.mesh import structured_level
from boxtherm.solver import Problem, SolverConfig, advance


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(level):
    mesh = structured_level(level)
    dual = build_dual(mesh)
    prob = Problem(mesh, CoefficientModel.from_presets("sigmoid:0.5,2.0", "sigmoid:1,2"),
                   dual=dual)
    pat = prob.pattern
    w = np.random.default_rng(0).uniform(0.5, 2.0, mesh.n_edges)
    A = pat.matrix(w, diag=prob.lumped / 0.01)
    b = np.ones(A.shape[0])
    x0 = np.zeros_like(b)
    csr = (A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data)
    return {
        "box_areas": (lambda f: f(mesh.triangles, dual.corner_area, mesh.n_vertices),
                      K.box_areas_np, K.box_areas_nb),
        "edge_csr_values": (lambda f: f(w, pat.pos_ab, pat.pos_ba, pat.diag_a,
                                        pat.diag_b, pat.nnz),
                            K.edge_csr_values_np, K.edge_csr_values_nb),
        "cg_csr": (lambda f: f(*csr, b, x0, 1e-12, 10 * len(b)),
                   K.cg_csr_np, K.cg_csr_nb),
    }


def time_step(level, repeat):
    mesh = structured_level(level)
    coeff = CoefficientModel.from_presets("sigmoid:0.5,2.0", "sigmoid:1,2")
    prob = Problem(mesh, coeff)
    cfg = SolverConfig(tau=0.01)
    u = np.zeros(mesh.n_vertices)
    out = {}
    for flag in ("0", "1"):
        os.environ["BOXTHERM_NUMBA"] = flag
        out[flag] = best_of(lambda: advance(prob, u, 0.0, cfg.tau, cfg), repeat)
    os.environ.pop("BOXTHERM_NUMBA")
    return out["0"], out["1"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="4..7")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        print("numba not installed; nothing to compare")
        return
    print(f"{'kernel':<16}{'level':>6}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for lv in parse_levels(args.levels):
        for name, (call, f_np, f_nb) in kernel_cases(lv).items():
            t_np = best_of(lambda: call(f_np), args.repeat)
            t_nb = best_of(lambda: call(f_nb), args.repeat)
            print(f"{name:<16}{lv:>6}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}"
                  f"{t_np / t_nb:>10.1f}")
        t_np, t_nb = time_step(lv, max(1, args.repeat // 2))
        print(f"{'time step':<16}{lv:>6}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}"
              f"{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
