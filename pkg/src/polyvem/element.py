"""Per-polygon virtual element machinery built entirely from Morley-type dofs.

The 2N local degrees of freedom of a polygon with N vertices are the vertex
values followed by the edge integrals of the outward normal derivative, both
in cycle order.  The energy projection G onto quadratics is computable from
the dofs alone: the constant Hessian of Gv comes from the boundary identity

    |P| D^2(Gv) = sum_k [dof_{N+k} n_k + (dof_{k+1} - dof_k) t_k] (x) n_k,

(symmetrized; the antisymmetric part telescopes to zero along the closed
cycle), the linear part from matching the boundary integral of the gradient,
and the constant from matching the vertex mean.  No virtual shape function is
ever constructed.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import quadrature as quad

SYMMETRY_TOL = 1e-10


class LocalElement:
    """Projector and stiffness contributions of one polygon.

    Attributes
    ----------
    coeff_map : (6, 2N) array
        Sends a local dof vector to the scaled-monomial coefficients of Gv.
    hessian_map : (3, 2N) array
        Sends a local dof vector to (H11, H12, H22) of the constant Hessian.
    dof_map : (2N, 2N) array
        Sends Dof(v) to Dof(Gv); idempotent.
    K_cons, K_stab, K : (2N, 2N) arrays
        Consistency part a^P(Gv, Gw), stabilization of the (1-G) components
        scaled by h_P^{-2}, and their sum.
    """

    def __init__(self, polygon, coeff_map, hessian_map, dof_map):
        self.polygon = polygon
        self.coeff_map = coeff_map
        self.hessian_map = hessian_map
        self.dof_map = dof_map
        self.K_cons = None
        self.K_stab = None
        self.K = None


def local_dofs_of_function(polygon, value, gradient, edge_order=quad.DEFAULT_EDGE_ORDER):
    """Dof vector of a function given its value and gradient callables.

    Edge entries integrate grad(v) . n with the *outward* normal of this
    polygon, exact whenever the normal derivative is a polynomial of degree
    at most 2*edge_order - 1 along the edge.
    """
    n = polygon.n_vertices
    dofs = np.empty(2 * n)
    dofs[:n] = value(polygon.coords)
    coords = polygon.coords
    nxt = np.roll(coords, -1, axis=0)
    for k in range(n):
        pts, wts = quad.edge_points(coords[k], nxt[k], edge_order)
        dofs[n + k] = np.dot(wts, gradient(pts) @ polygon.normals[k])
    return dofs


def dofs_of_polynomial(polygon, coeffs):
    """Exact dof vector of the quadratic with the given scaled-monomial coefficients.

    The normal derivative of a quadratic is affine along each edge, so the
    edge integral equals edge length times the midpoint value.
    """
    n = polygon.n_vertices
    dofs = np.empty(2 * n)
    dofs[:n] = quad.p2_value(polygon, coeffs, polygon.coords)
    grads = quad.p2_gradient(polygon, coeffs, polygon.edge_midpoints)
    dofs[n:] = polygon.edge_lengths * np.sum(grads * polygon.normals, axis=1)
    return dofs


def _monomial_dof_matrix(polygon):
    """(2N, 6) matrix whose columns are the dof vectors of the scaled monomials."""
    n = polygon.n_vertices
    mat = np.empty((2 * n, 6))
    mat[:n] = quad.monomial_values(polygon, polygon.coords)
    grads = quad.monomial_gradients(polygon, polygon.edge_midpoints)
    mat[n:] = polygon.edge_lengths[:, None] * np.einsum(
        "nkd,nd->nk", grads, polygon.normals
    )
    return mat


def build_projector(polygon):
    """Assemble the dof-to-quadratic projection maps for one polygon."""
    n = polygon.n_vertices
    nd = 2 * n
    t = polygon.tangents
    nor = polygon.normals
    area = polygon.area
    h = polygon.diameter

    # mean Hessian from the boundary identity, column by column over dofs
    tn = np.einsum("ki,kj->kij", t, nor)       # t_k (x) n_k
    nn = np.einsum("ki,kj->kij", nor, nor)     # n_k (x) n_k
    cols = np.empty((nd, 2, 2))
    cols[:n] = np.roll(tn, 1, axis=0) - tn     # vertex j: t_{j-1}(x)n_{j-1} - t_j(x)n_j
    cols[n:] = nn
    cols /= area
    hessian_map = np.empty((3, nd))
    hessian_map[0] = cols[:, 0, 0]
    hessian_map[1] = 0.5 * (cols[:, 0, 1] + cols[:, 1, 0])
    hessian_map[2] = cols[:, 1, 1]

    coeff_map = np.zeros((6, nd))
    coeff_map[3] = 0.5 * h**2 * hessian_map[0]
    coeff_map[4] = h**2 * hessian_map[1]
    coeff_map[5] = 0.5 * h**2 * hessian_map[2]

    # linear part: match the boundary integral of the gradient
    bnd = np.zeros((2, nd))
    bnd[:, :n] = (np.roll(t, 1, axis=0) - t).T
    bnd[:, n:] = nor.T
    perimeter = polygon.edge_lengths.sum()
    mono_mid = quad.monomial_values(polygon, polygon.edge_midpoints)
    m_xi = np.dot(polygon.edge_lengths, mono_mid[:, 1])
    m_eta = np.dot(polygon.edge_lengths, mono_mid[:, 2])
    coeff_map[1] = (
        h * bnd[0] - 2.0 * m_xi * coeff_map[3] - m_eta * coeff_map[4]
    ) / perimeter
    coeff_map[2] = (
        h * bnd[1] - m_xi * coeff_map[4] - 2.0 * m_eta * coeff_map[5]
    ) / perimeter

    # constant part: match the vertex mean
    vert_mono = quad.monomial_values(polygon, polygon.coords)
    coeff_map[0, :n] = 1.0 / n
    coeff_map[0] -= (vert_mono[:, 1:].sum(axis=0) / n) @ coeff_map[1:]

    dof_map = _monomial_dof_matrix(polygon) @ coeff_map
    return LocalElement(polygon, coeff_map, hessian_map, dof_map)


def local_matrices(polygon, element=None):
    """Attach K_cons, K_stab and K to the element of this polygon.

    K_cons realizes a^P(Gv, Gw) = |P| * B^T diag(1,2,1) B for the Hessian map
    B, and K_stab = h_P^{-2} (I - D_G)^T (I - D_G) stabilizes the projection
    complement.  Both are symmetric positive semidefinite; the kernel of the
    sum is exactly the dofs of affine functions.
    """
    if element is None:
        element = build_projector(polygon)
    B = element.hessian_map
    K_cons = polygon.area * (B.T * np.array([1.0, 2.0, 1.0])) @ B
    R = np.eye(len(element.dof_map)) - element.dof_map
    K_stab = (R.T @ R) / polygon.diameter**2
    K = K_cons + K_stab
    skew = np.abs(K - K.T).max()
    if skew > SYMMETRY_TOL * max(np.abs(K).max(), 1.0):
        raise ArithmeticError(
            f"asymmetric local stiffness on polygon {polygon.id} (skew {skew:.3e})"
        )
    element.K_cons = K_cons
    element.K_stab = K_stab
    element.K = 0.5 * (K + K.T)
    return element


def _worker_count():
    env = os.environ.get("POLYVEM_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def build_elements(mesh):
    """LocalElement (with matrices) for every polygon, in polygon-id order.

    Polygons are independent; with POLYVEM_THREADS > 1 the per-polygon builds
    run on a thread pool, merged back in id order for determinism.
    """
    polygons = [mesh.polygon(p) for p in range(mesh.n_polygons)]
    workers = _worker_count()
    if workers > 1 and mesh.n_polygons > 64:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(local_matrices, polygons))
    return [local_matrices(p) for p in polygons]
