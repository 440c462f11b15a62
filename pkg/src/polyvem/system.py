"""Global dof enumeration, sparse SPD assembly and linear solve.

Global dofs enumerate the vertex values first (ids 0..|V|-1) and the edge
normal-moment dofs second (ids |V|..|V|+|E|-1), the latter taken with the
fixed global edge normal.  On each polygon the local edge dof with outward
normal equals the global one up to the sign of n_P . n_E, recorded per
(polygon, edge).  Boundary conditions constrain all boundary dofs strongly by
the interpolated exact data.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import quadrature as quad
from .element import build_elements

DIRECT_SOLVER_LIMIT = 50_000
ASSEMBLY_SYMMETRY_TOL = 1e-10
RESIDUAL_TOL = 1e-10


class DofMap:
    """Global enumeration |V| vertex dofs + |E| edge dofs with sign bookkeeping."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.n_dofs = mesh.n_vertices + mesh.n_edges
        self.boundary = np.concatenate([mesh.boundary_vertex, mesh.boundary_edge])
        self.free = ~self.boundary

    @property
    def n_free(self):
        return int(self.free.sum())

    def polygon_dofs(self, pid):
        """Global ids and local-to-global signs for one polygon, dof order:
        cycle vertices then cycle edges."""
        mesh = self.mesh
        cycle = mesh.cycles[pid]
        eids = mesh.polygon_edges[pid]
        gids = np.concatenate([cycle, mesh.n_vertices + eids])
        signs = np.concatenate(
            [np.ones(len(cycle), dtype=int), mesh.polygon_edge_signs[pid]]
        )
        return gids, signs


def build_dof_map(mesh):
    return DofMap(mesh)


def assemble(mesh, dof_map, elements):
    """Sum the signed local stiffness matrices into a global sparse CSR matrix.

    Triplets are accumulated in polygon-id order, so assembly is deterministic
    and bit-reproducible.
    """
    rows, cols, vals = [], [], []
    for pid in range(mesh.n_polygons):
        gids, signs = dof_map.polygon_dofs(pid)
        K = elements[pid].K * np.outer(signs, signs)
        nd = len(gids)
        rows.append(np.repeat(gids, nd))
        cols.append(np.tile(gids, nd))
        vals.append(K.ravel())
    n = dof_map.n_dofs
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    skew = abs(A - A.T).max()
    scale = max(abs(A).max(), 1.0)
    if skew > ASSEMBLY_SYMMETRY_TOL * scale:
        raise ArithmeticError(f"assembled matrix asymmetric beyond tolerance ({skew:.3e})")
    return A


def boundary_data(mesh, dof_map, value, gradient, edge_order=quad.DEFAULT_EDGE_ORDER):
    """Constrained dof values interpolating exact boundary data.

    Boundary vertex dofs take the exact value; boundary edge dofs take the
    integral of grad(u) . n_E with the global (outward) edge normal.
    """
    g = np.zeros(dof_map.n_dofs)
    bv = np.nonzero(mesh.boundary_vertex)[0]
    if len(bv):
        g[bv] = value(mesh.vertices[bv])
    for eid in np.nonzero(mesh.boundary_edge)[0]:
        a, b = mesh.edges[eid]
        pts, wts = quad.edge_points(mesh.vertices[a], mesh.vertices[b], edge_order)
        g[mesh.n_vertices + eid] = np.dot(wts, gradient(pts) @ mesh.edge_normals[eid])
    return g


def load_vector(mesh, elements, f, dof_map, degree=quad.DEFAULT_DEGREE):
    """Right-hand side F(Gv_h): per polygon, integrate f against the projected
    nodal quadratics and scatter with signs.  ``f = None`` means zero load."""
    b = np.zeros(dof_map.n_dofs)
    if f is None:
        return b
    for pid in range(mesh.n_polygons):
        poly = mesh.polygon(pid)
        pts, wts = quad.polygon_points(poly, degree)
        moments = quad.monomial_values(poly, pts).T @ (wts * f(pts))
        gids, signs = dof_map.polygon_dofs(pid)
        b[gids] += signs * (elements[pid].coeff_map.T @ moments)
    return b


class DiscreteSolution:
    """Global dof vector with handles to the mesh and per-polygon projectors."""

    def __init__(self, mesh, dof_map, elements, values):
        self.mesh = mesh
        self.dof_map = dof_map
        self.elements = elements
        self.values = values
        self._coeffs = [None] * mesh.n_polygons

    def local_dofs(self, pid):
        """Signed local dof vector of polygon ``pid``."""
        gids, signs = self.dof_map.polygon_dofs(pid)
        return signs * self.values[gids]

    def g_coeffs(self, pid):
        """Scaled-monomial coefficients of G u_h on polygon ``pid``."""
        c = self._coeffs[pid]
        if c is None:
            c = self.elements[pid].coeff_map @ self.local_dofs(pid)
            self._coeffs[pid] = c
        return c


def solve(mesh, dof_map, elements, A, b, g, solver="auto"):
    """Solve the constrained system and return the full DiscreteSolution.

    Boundary dofs are eliminated (rhs gets the -A_fc g correction).  A sparse
    direct factorization handles up to 50k free dofs; larger systems fall back
    to Jacobi-preconditioned conjugate gradients at 1e-10 relative tolerance.
    """
    free = dof_map.free
    x = g.copy()
    nfree = dof_map.n_free
    if nfree:
        A_ff = A[free][:, free].tocsc()
        rhs = b[free] - A[free][:, ~free] @ g[~free]
        if solver == "direct" or (solver == "auto" and nfree <= DIRECT_SOLVER_LIMIT):
            xf = spla.splu(A_ff).solve(rhs)
        elif solver in ("cg", "auto"):
            diag = A_ff.diagonal()
            M = sp.diags(1.0 / diag)
            xf, info = spla.cg(
                A_ff, rhs, rtol=RESIDUAL_TOL, atol=0.0,
                maxiter=20 * dof_map.n_dofs, M=M,
            )
            if info != 0:
                raise ArithmeticError(
                    f"conjugate gradients did not converge (info={info}); "
                    "the system is likely not positive definite"
                )
        else:
            raise ValueError(f"unknown solver {solver!r}")
        res = np.linalg.norm(A_ff @ xf - rhs)
        ref = np.linalg.norm(rhs)
        if res > RESIDUAL_TOL * max(ref, 1e-30) and res > 1e-12 * abs(A_ff).max():
            raise ArithmeticError(
                f"linear solve residual {res:.3e} exceeds tolerance (|rhs|={ref:.3e})"
            )
        x[free] = xf
    return DiscreteSolution(mesh, dof_map, elements, x)


def solve_bvp(mesh, source, value, gradient, quad_degree=quad.DEFAULT_DEGREE,
              edge_order=quad.DEFAULT_EDGE_ORDER, solver="auto"):
    """Assemble and solve the discrete problem on a mesh.

    Parameters
    ----------
    source : callable or None
        Load f, vectorized over (n, 2) point arrays; None means f = 0.
    value, gradient : callables
        Exact solution data imposed on the boundary dofs.
    """
    elements = build_elements(mesh)
    dof_map = build_dof_map(mesh)
    A = assemble(mesh, dof_map, elements)
    b = load_vector(mesh, elements, source, dof_map, degree=quad_degree)
    g = boundary_data(mesh, dof_map, value, gradient, edge_order=edge_order)
    return solve(mesh, dof_map, elements, A, b, g, solver=solver)


def write_solution(solution, path):
    """Plain-text dump: "ndof" then one "id value" line per global dof."""
    with open(path, "w") as fh:
        fh.write(f"{solution.dof_map.n_dofs}\n")
        for i, v in enumerate(solution.values):
            fh.write(f"{i} {v!r}\n")


def write_g_coefficients(solution, path):
    """Per-polygon coefficients of G u_h, six reals per line."""
    with open(path, "w") as fh:
        for pid in range(solution.mesh.n_polygons):
            fh.write(" ".join(repr(c) for c in solution.g_coeffs(pid)) + "\n")
