"""Configuration-driven benchmark runner.

Runs a benchmark in uniform or adaptive mode and writes the convergence
history CSV, per-level estimator CSVs, the final mesh and solution dumps, and
log-log SVG figures (errors/estimators for m = 2 and m = 1 plus the estimator
components).  With --check the fitted rates are validated against the
expected bands and a violation exits with status 2.
"""

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import quadrature as quad
from .adaptive import MarkParams, run_adaptive, run_uniform, write_history_csv
from .bench import benchmark_names, get_benchmark
from .estimator import write_estimator_csv
from .mesh import read_mesh_file, write_mesh_file
from .system import write_g_coefficients, write_solution


@dataclass
class RunConfig:
    benchmark: str = "lshape"
    mode: str = "adaptive"
    theta: float = 0.5
    drive_m: int = 2
    sigma: float = None
    levels: int = 10
    max_ndof: int = None
    quad_degree: int = quad.DEFAULT_DEGREE
    solver: str = "auto"
    out: str = "out"
    run_id: str = "run"
    mesh_file: str = None

    def validate(self):
        if self.benchmark not in benchmark_names():
            raise ValueError(
                f"unknown benchmark {self.benchmark!r}; choose from {benchmark_names()}"
            )
        if self.mode not in ("uniform", "adaptive"):
            raise ValueError("mode must be 'uniform' or 'adaptive'")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.drive_m not in (1, 2):
            raise ValueError("drive_m must be 1 or 2")
        if self.levels < 1:
            raise ValueError("levels must be positive")
        if self.quad_degree < 2:
            raise ValueError("quad_degree must be at least 2")
        if self.solver not in ("auto", "direct", "cg"):
            raise ValueError("solver must be auto, direct or cg")


_INT_FIELDS = {"drive_m", "levels", "max_ndof", "quad_degree"}
_FLOAT_FIELDS = {"theta", "sigma"}


def parse_config_file(path):
    """Plain key=value configuration; '#' starts a comment; unknown keys rejected."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip().strip("\"'")
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in _INT_FIELDS:
            values[key] = int(val)
        elif key in _FLOAT_FIELDS:
            values[key] = float(val)
        else:
            values[key] = val
    return values


# rate bands validated by --check: (column, lo, hi) per benchmark and mode
_CHECK_BANDS = {
    ("lshape", "uniform"): [("H2e", 0.26, 0.41), ("H1e", 0.55, 0.80)],
    ("lshape", "adaptive"): [("H2e", 0.40, 0.60)],
    ("zshape", "uniform"): [("H2e", 0.18, 0.33)],
    ("zshape", "adaptive"): [("H2e", 0.42, 0.58)],
    ("smooth_square", "uniform"): [("H2e", 0.42, 0.58), ("H1e", 0.85, 1.10)],
}


def run_config(config, check=False):
    """Execute one configured run; returns (history, exit_code)."""
    config.validate()
    bench = get_benchmark(config.benchmark)
    if config.mesh_file:
        mesh0 = read_mesh_file(config.mesh_file)
        bench.make_mesh = lambda: mesh0
    outdir = Path(config.out) / config.run_id
    outdir.mkdir(parents=True, exist_ok=True)

    if config.mode == "uniform":
        history = run_uniform(
            bench, config.levels, max_ndof=config.max_ndof, sigma=config.sigma,
            quad_degree=config.quad_degree, solver=config.solver,
        )
    else:
        params = MarkParams(theta=config.theta, drive_m=config.drive_m)
        history = run_adaptive(
            bench, params, max_levels=config.levels, max_ndof=config.max_ndof,
            sigma=config.sigma, quad_degree=config.quad_degree,
            solver=config.solver,
        )

    write_history_csv(history, outdir / "history.csv")
    final_mesh = history.final_mesh
    for rec, fld, osc2 in zip(history.records, history.fields, history.osc2):
        write_estimator_csv(fld, osc2, outdir / f"estimator_level_{rec.level:02d}.csv")
    write_mesh_file(final_mesh, outdir / "final_mesh.txt")
    write_solution(history.final_solution, outdir / "final_solution.txt")
    write_g_coefficients(history.final_solution, outdir / "final_g_coeffs.txt")

    from . import plotting  # deferred: pulls in matplotlib

    sig = bench.sigma if config.sigma is None else config.sigma
    rate_h2 = 0.5 if config.mode == "adaptive" else sig / 2.0
    rate_h1 = (1 + sig) / 2.0 if config.mode == "adaptive" else sig
    plotting.plot_convergence(history, 2, rate_h2, outdir / "convergence_m2.svg")
    plotting.plot_convergence(history, 1, rate_h1, outdir / "convergence_m1.svg")
    plotting.plot_components(history, outdir / "components.svg")
    plotting.plot_mesh(final_mesh, outdir / "final_mesh.svg",
                       title=f"{bench.name} level {history.records[-1].level}")

    code = _report(history, bench, config, check)
    return history, code


def _report(history, bench, config, check):
    rate_h2 = history.fitted_rate("H2e")
    rate_h1 = history.fitted_rate("H1e")
    h2_ratio = history.column("H2mu") / history.column("H2e")
    h1_ratio = history.column("H1mu") / history.column("H1e")
    print(f"benchmark={bench.name} mode={config.mode} levels={len(history.records)} "
          f"final_ndof={history.records[-1].ndof}")
    print(f"fitted rates vs ndof: H2e {rate_h2:.3f}, H1e {rate_h1:.3f}")
    print(f"efficiency index H2mu/H2e in [{h2_ratio.min():.2f}, {h2_ratio.max():.2f}], "
          f"H1mu/H1e in [{h1_ratio.min():.2f}, {h1_ratio.max():.2f}]")

    if not check:
        return 0
    failures = []
    if bench.name == "patch_p2":
        h2e = history.records[-1].H2e
        mu = history.records[-1].H2mu
        if h2e > 1e-8:
            failures.append(f"patch test H2e = {h2e:.3e} > 1e-8")
        if mu > 1e-7:
            failures.append(f"patch test estimator = {mu:.3e} > 1e-7")
    for col, lo, hi in _CHECK_BANDS.get((bench.name, config.mode), []):
        rate = history.fitted_rate(col)
        if not lo <= rate <= hi:
            failures.append(f"{col} rate {rate:.3f} outside [{lo}, {hi}]")
    for msg in failures:
        print(f"CHECK FAILED: {msg}", file=sys.stderr)
    return 2 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polyvem",
        description="biharmonic virtual element benchmark runner",
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--benchmark", choices=benchmark_names())
    parser.add_argument("--mode", choices=["uniform", "adaptive"])
    parser.add_argument("--theta", type=float)
    parser.add_argument("--drive-m", dest="drive_m", type=int, choices=[1, 2])
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--levels", type=int)
    parser.add_argument("--max-ndof", dest="max_ndof", type=int)
    parser.add_argument("--quad-degree", dest="quad_degree", type=int)
    parser.add_argument("--solver", choices=["auto", "direct", "cg"])
    parser.add_argument("--out")
    parser.add_argument("--run-id", dest="run_id")
    parser.add_argument("--mesh-file", dest="mesh_file")
    parser.add_argument("--check", action="store_true",
                        help="exit 2 when a rate band or patch threshold fails")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        values = parse_config_file(args.config) if args.config else {}
        for f in fields(RunConfig):
            flag = getattr(args, f.name, None)
            if flag is not None:
                values[f.name] = flag
        config = RunConfig(**values)
        config.validate()
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _, code = run_config(config, check=args.check)
    return code


if __name__ == "__main__":
    sys.exit(main())
