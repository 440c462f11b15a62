"""Numerical integration on triangles, polygons and edges.

Polygon integrals run over the star sub-triangulation with a product Gauss
rule on each triangle (Duffy map), exact for polynomials up to the requested
degree.  Edge integrals use Gauss-Legendre.  The module also carries the
scaled monomial basis {1, xi, eta, xi^2, xi*eta, eta^2} with
xi = (x - x_P)/h_P centered at the polygon centroid, and the L2 projection
onto quadratics used for the data oscillation.
"""

from functools import lru_cache

import numpy as np

from .mesh import MeshError, subtriangulate

DEFAULT_DEGREE = 10
DEFAULT_EDGE_ORDER = 5


class TriangleRule:
    """Quadrature points in barycentric coordinates with weights summing to 1."""

    def __init__(self, degree, points, weights):
        self.degree = degree
        self.points = points
        self.weights = weights


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Product Gauss rule on the reference triangle, exact to ``degree``.

    The Duffy map (u, v) -> (u, v(1-u)) turns a total-degree-d integrand into
    a polynomial of degree at most d+1 per direction, so n Gauss points per
    direction with 2n-1 >= d+1 suffice.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n = (degree + 3) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(wu * (1.0 - u), wu).ravel()
    xs = uu.ravel()
    ys = (vv * (1.0 - uu)).ravel()
    bary = np.column_stack([1.0 - xs - ys, xs, ys])
    # reference triangle area is 1/2; rescale so the weights sum to one
    return TriangleRule(degree, bary, 2.0 * ww)


@lru_cache(maxsize=None)
def edge_rule(order):
    """Gauss-Legendre points/weights on [0, 1], exact to degree 2*order - 1."""
    if order < 1:
        raise ValueError("order must be at least 1")
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_points(tris, degree):
    """Map a rule to physical triangles.

    Parameters
    ----------
    tris : (m, 3, 2) array of triangle vertices
    Returns
    -------
    pts : (m*q, 2) physical quadrature points
    wts : (m*q,) weights including the triangle areas
    """
    rule = triangle_rule(degree)
    pts = np.einsum("qk,mkd->mqd", rule.points, tris)
    u = tris[:, 1] - tris[:, 0]
    v = tris[:, 2] - tris[:, 0]
    areas = 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    if np.any(areas <= 0.0):
        raise MeshError("degenerate sub-triangle in polygon quadrature")
    wts = areas[:, None] * rule.weights[None, :]
    return pts.reshape(-1, 2), wts.ravel()


def polygon_points(polygon, degree):
    """Quadrature points and weights covering a star-shaped polygon."""
    return triangle_points(subtriangulate(polygon), degree)


def integrate_polygon(polygon, f, degree=DEFAULT_DEGREE):
    """Integrate ``f`` (vectorized over an (n, 2) point array) over the polygon."""
    pts, wts = polygon_points(polygon, degree)
    return float(np.dot(wts, f(pts)))


def integrate_edge(a, b, f, order=DEFAULT_EDGE_ORDER):
    """Integrate ``f`` along the segment from a to b by Gauss-Legendre."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    if length <= 0.0:
        raise ValueError("zero-length edge")
    s, w = edge_rule(order)
    pts = a[None, :] + s[:, None] * (b - a)[None, :]
    return length * float(np.dot(w, f(pts)))


def edge_points(a, b, order=DEFAULT_EDGE_ORDER):
    """Gauss points and weights (already scaled by length) on a segment."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s, w = edge_rule(order)
    pts = a[None, :] + s[:, None] * (b - a)[None, :]
    return pts, w * float(np.hypot(*(b - a)))


# ---------------------------------------------------------------------------
# scaled monomial basis on a polygon

def monomial_values(polygon, pts):
    """Values of the six scaled monomials at ``pts``, shape (n, 6)."""
    xi = (pts[:, 0] - polygon.centroid[0]) / polygon.diameter
    eta = (pts[:, 1] - polygon.centroid[1]) / polygon.diameter
    return np.column_stack(
        [np.ones_like(xi), xi, eta, xi**2, xi * eta, eta**2]
    )


def monomial_gradients(polygon, pts):
    """Gradients of the six scaled monomials at ``pts``, shape (n, 6, 2)."""
    h = polygon.diameter
    xi = (pts[:, 0] - polygon.centroid[0]) / h
    eta = (pts[:, 1] - polygon.centroid[1]) / h
    n = len(pts)
    g = np.zeros((n, 6, 2))
    g[:, 1, 0] = 1.0 / h
    g[:, 2, 1] = 1.0 / h
    g[:, 3, 0] = 2.0 * xi / h
    g[:, 4, 0] = eta / h
    g[:, 4, 1] = xi / h
    g[:, 5, 1] = 2.0 * eta / h
    return g


def p2_value(polygon, coeffs, pts):
    """Evaluate a quadratic given by scaled-monomial coefficients."""
    return monomial_values(polygon, pts) @ coeffs


def p2_gradient(polygon, coeffs, pts):
    """Gradient of the quadratic at ``pts``, shape (n, 2)."""
    return np.einsum("nkd,k->nd", monomial_gradients(polygon, pts), coeffs)


def p2_hessian(polygon, coeffs):
    """Constant Hessian of the quadratic as (H11, H12, H22)."""
    h2 = polygon.diameter**2
    return np.array([2.0 * coeffs[3] / h2, coeffs[4] / h2, 2.0 * coeffs[5] / h2])


def l2_project_p2(polygon, f, degree=DEFAULT_DEGREE):
    """Coefficients of the L2-best quadratic approximation of ``f`` on the polygon."""
    pts, wts = polygon_points(polygon, max(degree, 4))
    basis = monomial_values(polygon, pts)
    mass = basis.T @ (wts[:, None] * basis)
    rhs = basis.T @ (wts * f(pts))
    try:
        return np.linalg.solve(mass, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise MeshError(f"singular P2 mass matrix on polygon {polygon.id}") from exc
