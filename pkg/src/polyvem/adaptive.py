"""Solve -> Estimate -> Mark -> Refine loop with Doerfler marking.

Marking selects a minimal-cardinality polygon set carrying a theta fraction
of the total squared indicator (greedy descending sort, ties broken by
ascending polygon id).  The indicator driving the marking is the weighted
local contribution h_P^(2 sigma (2-m)) mu_P^2 for a configurable m.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bench import error_norms
from .estimator import estimate, oscillation
from .mesh import refine
from .system import solve_bvp
from . import quadrature as quad


@dataclass
class MarkParams:
    theta: float = 0.5
    drive_m: int = 2

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.drive_m not in (1, 2):
            raise ValueError("drive_m must be 1 or 2")


def dorfler_mark(indicators2, theta):
    """Minimal set of ids whose squared indicators sum to >= theta * total.

    Returns an empty array when all indicators vanish, which signals loop
    termination.
    """
    indicators2 = np.asarray(indicators2, dtype=float)
    if np.any(indicators2 < 0.0):
        raise ValueError("indicators must be nonnegative")
    total = indicators2.sum()
    if total <= 0.0:
        return np.array([], dtype=int)
    order = np.lexsort((np.arange(len(indicators2)), -indicators2))
    csum = np.cumsum(indicators2[order])
    count = int(np.searchsorted(csum, theta * total - 1e-14 * total)) + 1
    return np.sort(order[:count])


@dataclass
class LevelRecord:
    level: int
    ndof: int
    H1e: float
    H2e: float
    H1mu: float
    H2mu: float
    eta: float
    zeta: float
    xi_fn: float
    xi_nd: float
    osc: float
    seconds: float


@dataclass
class ConvergenceHistory:
    benchmark: str
    mode: str
    records: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    osc2: list = field(default_factory=list)
    final_mesh: Optional[object] = None
    final_solution: Optional[object] = None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def fitted_rate(self, name, window=3):
        """Least-squares slope of log(value) vs log(ndof) over the last
        ``window`` levels, sign-flipped so decaying errors give positive rates."""
        vals = self.column(name)[-window:]
        ndof = self.column("ndof")[-window:]
        keep = vals > 0.0
        if keep.sum() < 2:
            return float("nan")
        slope = np.polyfit(np.log(ndof[keep]), np.log(vals[keep]), 1)[0]
        return float(-slope)


def _run(bench, mode, params, max_levels, max_ndof, sigma, quad_degree,
         edge_order, solver):
    mesh = bench.make_mesh()
    history = ConvergenceHistory(benchmark=bench.name, mode=mode)
    prev_ndof = 0
    for level in range(1, max_levels + 1):
        t0 = time.perf_counter()
        solution = solve_bvp(
            mesh, bench.source, bench.value, bench.gradient,
            quad_degree=quad_degree, edge_order=edge_order, solver=solver,
        )
        h1e, h2e = error_norms(mesh, solution, bench, degree=quad_degree)
        fld = estimate(
            mesh, solution, bench.source, bench.value, bench.gradient, sigma,
            quad_degree=quad_degree, edge_order=edge_order,
        )
        osc2, osc_total = oscillation(mesh, bench.source, quad_degree=quad_degree)
        ndof = mesh.n_vertices + mesh.n_edges
        if ndof <= prev_ndof:
            raise RuntimeError(
                f"ndof did not increase at level {level} ({prev_ndof} -> {ndof})"
            )
        prev_ndof = ndof
        comp = fld.component_totals()
        history.records.append(
            LevelRecord(
                level=level,
                ndof=ndof,
                H1e=h1e,
                H2e=h2e,
                H1mu=fld.total(1),
                H2mu=fld.total(2),
                eta=comp["eta"],
                zeta=comp["zeta"],
                xi_fn=comp["xi_fn"],
                xi_nd=comp["xi_nd"],
                osc=float(np.sqrt(osc_total)),
                seconds=time.perf_counter() - t0,
            )
        )
        history.fields.append(fld)
        history.osc2.append(osc2)
        history.final_mesh = mesh
        history.final_solution = solution
        if level == max_levels or (max_ndof and ndof >= max_ndof):
            break
        if mode == "uniform":
            marked = np.arange(mesh.n_polygons)
        else:
            marked = dorfler_mark(fld.weighted_mu2(params.drive_m), params.theta)
            if len(marked) == 0:
                break
        mesh = refine(mesh, marked)
    return history


def run_adaptive(bench, params=None, max_levels=15, max_ndof=None, sigma=None,
                 quad_degree=quad.DEFAULT_DEGREE,
                 edge_order=quad.DEFAULT_EDGE_ORDER, solver="auto"):
    """Adaptive loop on a benchmark; returns the ConvergenceHistory."""
    params = params or MarkParams()
    sigma = bench.sigma if sigma is None else sigma
    return _run(bench, "adaptive", params, max_levels, max_ndof, sigma,
                quad_degree, edge_order, solver)


def run_uniform(bench, levels, max_ndof=None, sigma=None,
                quad_degree=quad.DEFAULT_DEGREE,
                edge_order=quad.DEFAULT_EDGE_ORDER, solver="auto"):
    """Uniform refinement loop (every polygon marked at every level)."""
    sigma = bench.sigma if sigma is None else sigma
    return _run(bench, "uniform", MarkParams(), levels, max_ndof, sigma,
                quad_degree, edge_order, solver)


def write_history_csv(history, path):
    """History CSV, one row per level, schema documented in the README."""
    cols = ["level", "ndof", "H1e", "H2e", "H1mu", "H2mu",
            "eta", "zeta", "xi_fn", "xi_nd", "osc", "seconds"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in history.records:
            cells = [str(rec.level), str(rec.ndof)]
            cells += [repr(getattr(rec, c)) for c in cols[2:-1]]
            cells.append(f"{rec.seconds:.3f}")
            fh.write(",".join(cells) + "\n")
