"""Command-line front end: ``boxtherm {mesh,solve,converge,verify}``.

Settings come from an optional ``key = value`` config file (``#`` starts a
comment) overridden by command-line flags. Defaults:

    mesh_n = 16            mesh_file = (none)     k = const:1
    f = const:1            lambda = 1.0           u0 = zero
    tf = 0.1               dt = 0.01              picard_tol = 1e-10
    levels = (per command) benchmark = standard   out = .
    vtk = false            reproducible = false   integral_rule = lumped
    snapshot_stride = 1    picard_max_iters = 30  cg_tol = 1e-12
    cg_max_iters = 0 (auto) tau_backoff = 0.5     max_backoffs = 10

``levels`` is ``a..b`` or a single ``n`` meaning ``1..n``. Exit status:
0 success, 1 usage or config error, 2 numerical failure, 3 verification FAIL.
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import vtk
from .coefficients import CoefficientModel, HypothesisViolation
from .dual import build_dual
from .mesh import MeshError, generate_structured_mesh, load_mesh, save_mesh, validate_mesh
from .problems import BENCHMARKS
from .solver import Problem, SolverConfig, SolverError, solve_transient
from .verification import invariant_suite, richardson_study, run_convergence_study

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_FAIL = 0, 1, 2, 3
COMMANDS = ("mesh", "solve", "converge", "verify")
DEFAULT_LEVELS = {"converge": (2, 3, 4, 5), "verify": (1, 2, 3, 4, 5)}
STUDIES = tuple(BENCHMARKS) + ("richardson",)

log = logging.getLogger("boxtherm")


class ConfigError(ValueError):
    pass


@dataclass
class RunSpec:
    command: str
    mesh_n: int = 16
    mesh_file: Optional[str] = None
    k: str = "const:1"
    f: str = "const:1"
    lam: float = 1.0
    u0: str = "zero"
    tf: float = 0.1
    dt: float = 0.01
    picard_tol: float = 1e-10
    levels: Optional[tuple] = None
    benchmark: str = "standard"
    out: str = "."
    vtk: bool = False
    reproducible: bool = False
    integral_rule: str = "lumped"
    snapshot_stride: int = 1
    picard_max_iters: int = 30
    cg_tol: float = 1e-12
    cg_max_iters: int = 0          # 0 picks 10 n + 100
    tau_backoff: float = 0.5
    max_backoffs: int = 10

    def solver_config(self):
        return SolverConfig(tau=self.dt, t_final=self.tf, picard_tol=self.picard_tol,
                            picard_max_iters=self.picard_max_iters, cg_tol=self.cg_tol,
                            cg_max_iters=self.cg_max_iters or None,
                            tau_backoff=self.tau_backoff, max_backoffs=self.max_backoffs,
                            snapshot_stride=self.snapshot_stride,
                            integral_rule=self.integral_rule)

    def coefficients(self):
        return CoefficientModel.from_presets(self.k, self.f, self.lam)


# config keys (file spelling) -> RunSpec field
_ALIASES = {"lambda": "lam"}
_FIELDS = {f.name: f for f in fields(RunSpec)}
KEYS = sorted(({n for n in _FIELDS if n not in ("command", "lam")} | set(_ALIASES)))


def parse_levels(text):
    s = str(text).strip()
    try:
        if ".." in s:
            a, b = (int(p) for p in s.split("..", 1))
        else:
            a, b = 1, int(s)
    except ValueError:
        raise ConfigError(f"levels must be 'a..b' or 'n', got {text!r}") from None
    if not 1 <= a <= b:
        raise ConfigError(f"empty or invalid level range {text!r}")
    return tuple(range(a, b + 1))


def _bool(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _convert(name, value):
    if name == "levels":
        return value if isinstance(value, tuple) else parse_levels(value)
    kind = _FIELDS[name].type
    try:
        if kind in (int, "int"):
            return int(value)
        if kind in (float, "float"):
            return float(value)
        if kind in (bool, "bool"):
            return value if isinstance(value, bool) else _bool(value)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {value!r}") from None
    return str(value).strip()


def read_config_text(text):
    """``key = value`` pairs; unknown keys and malformed lines are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _validate_u0(text):
    name, _, arg = text.partition(":")
    if name == "zero" and not arg:
        return
    if name == "sine":
        try:
            float(arg or 1.0)
            return
        except ValueError:
            pass
    raise ConfigError(f"unknown u0 preset {text!r} (use 'zero' or 'sine:A')")


def parse_config(text, overrides=None, command="solve"):
    """Merge a config file with overrides (overrides win) into a RunSpec."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    values = read_config_text(text or "")
    for key, value in (overrides or {}).items():
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            values[key] = value
    kwargs = {_ALIASES.get(k, k): v for k, v in values.items()}
    kwargs = {k: _convert(k, v) for k, v in kwargs.items()}
    spec = RunSpec(command=command, **kwargs)
    if spec.levels is None:
        spec.levels = DEFAULT_LEVELS.get(command)

    if spec.mesh_n < 1:
        raise ConfigError("mesh_n must be >= 1")
    if spec.cg_max_iters < 0 or spec.max_backoffs < 0:
        raise ConfigError("cg_max_iters and max_backoffs must be >= 0")
    try:
        spec.solver_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if spec.tf <= 0:
        raise ConfigError("tf must be positive")
    if spec.integral_rule not in ("lumped", "centroid"):
        raise ConfigError(f"unknown integral_rule {spec.integral_rule!r}")
    if spec.benchmark not in STUDIES:
        raise ConfigError(f"unknown benchmark {spec.benchmark!r}; choose from "
                          f"{', '.join(STUDIES)}")
    _validate_u0(spec.u0)
    try:
        spec.coefficients()
    except HypothesisViolation as exc:
        raise ConfigError(f"coefficient rejected: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return spec


# -- execution -----------------------------------------------------------------

def _mesh(spec):
    if spec.mesh_file:
        return load_mesh(spec.mesh_file)
    return generate_structured_mesh(spec.mesh_n)


def _u0(spec):
    name, _, arg = spec.u0.partition(":")
    if name == "zero":
        return None
    amp = float(arg or 1.0)
    return lambda x, y: amp * np.sin(np.pi * x) * np.sin(np.pi * y)


def _out(spec, name):
    os.makedirs(spec.out, exist_ok=True)
    return os.path.join(spec.out, name)


def _run_mesh(spec):
    mesh = _mesh(spec)
    report = validate_mesh(mesh)
    save_mesh(mesh, _out(spec, "mesh.txt"))
    text = "\n".join(report.lines()) + "\n"
    with open(_out(spec, "mesh_report.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    if spec.vtk:
        vtk.write_boxes(_out(spec, "boxes.vtk"), build_dual(mesh))
    return EXIT_OK if report.ok else EXIT_FAIL


def _run_solve(spec):
    mesh = _mesh(spec)
    problem = Problem(mesh, spec.coefficients(), u0=_u0(spec),
                      integral_rule=spec.integral_rule)
    traj = solve_transient(problem, spec.solver_config())
    traj.write_csv(_out(spec, "trajectory.csv"))
    if spec.vtk:
        vtk.write_boxes(_out(spec, "boxes.vtk"), problem.dual)
        for i, (t, u) in enumerate(zip(traj.times, traj.fields)):
            vtk.write_field(_out(spec, f"u_{i:04d}.vtk"), mesh, u, title=f"u at t={t!r}")
    its = [s.picard_iterations for s in traj.steps]
    print(f"steps {len(traj.steps)} snapshots {len(traj.times)} "
          f"max|u| {np.abs(traj.fields[-1]).max():.6e} "
          f"picard_max {max(its, default=0)}")
    return EXIT_OK


def _run_converge(spec):
    threads = 1 if spec.reproducible else None
    if spec.benchmark == "richardson":
        levels = spec.levels
        report = richardson_study(levels, ref_level=max(levels) + 2, k=spec.k, f=spec.f,
                                  lam=spec.lam, threads=threads)
    else:
        report = run_convergence_study(spec.benchmark, spec.levels, threads=threads)
    text = report.to_csv()
    with open(_out(spec, "errors.csv"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_OK if report.passed() else EXIT_FAIL


def _run_verify(spec):
    checks = invariant_suite(spec.levels)
    lines = [c.line() for c in checks]
    with open(_out(spec, "verify.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


RUNNERS = {"mesh": _run_mesh, "solve": _run_solve, "converge": _run_converge,
           "verify": _run_verify}


def execute(spec):
    """Run ``spec`` and return the exit status; errors become one-line messages."""
    try:
        return RUNNERS[spec.command](spec)
    except (MeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, HypothesisViolation, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def build_parser():
    p = argparse.ArgumentParser(prog="boxtherm",
                                description="Box-scheme solver for the nonlocal "
                                            "thermistor problem.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--mesh-n", type=int, help="cells per side of the generated mesh")
    p.add_argument("--mesh-file", help="mesh file instead of a generated mesh")
    p.add_argument("--lambda", dest="lambda_", metavar="LAMBDA", type=float,
                   help="source strength")
    p.add_argument("--k", help="conductivity preset, e.g. sigmoid:0.5,2.0")
    p.add_argument("--f", help="heating preset, e.g. const:1")
    p.add_argument("--u0", help="initial datum: zero or sine:A")
    p.add_argument("--tf", type=float, help="final time")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--picard-tol", type=float)
    p.add_argument("--levels", help="'a..b' or 'n' (= 1..n)")
    p.add_argument("--benchmark", help=f"one of {', '.join(STUDIES)}")
    p.add_argument("--integral-rule", choices=("lumped", "centroid"))
    p.add_argument("--snapshot-stride", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--vtk", action="store_true", default=None, help="also write VTK files")
    p.add_argument("--reproducible", action="store_true", default=None,
                   help="single-threaded, deterministic run")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "verbose", "lambda_")}
    overrides["lambda"] = args.lambda_
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        spec = parse_config(text, overrides, args.command)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return execute(spec)


if __name__ == "__main__":
    sys.exit(main())
