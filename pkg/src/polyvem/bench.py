"""Benchmark problems with exact solutions and the piecewise error norms.

Each benchmark bundles the exact solution (value, gradient, Hessian), the
source term, the regularity weight sigma entering the estimator totals, and a
coarse-mesh factory.  Hessians are returned as (H11, H12, H22) triples to
match the contraction A11^2 + 2 A12^2 + A22^2 used by the energy norm.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quadrature as quad
from .corner_profile import CornerProfile
from .mesh import lshape_mesh, square_grid_mesh, zshape_mesh


@dataclass
class Benchmark:
    name: str
    value: Callable
    gradient: Callable
    hessian: Callable
    source: Optional[Callable]
    sigma: float
    make_mesh: Callable = field(repr=False)


# ---------------------------------------------------------------------------
# polar helper for corner functions r^lam * g(theta)

def _polar(pts, branch_lo=0.0):
    """(r, theta) with theta wrapped into [branch_lo, branch_lo + 2 pi)."""
    x, y = pts[:, 0], pts[:, 1]
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    theta = np.where(theta < branch_lo - 1e-14, theta + 2.0 * np.pi, theta)
    return r, theta


class _SingularTerm:
    """Value, gradient, Hessian and grad(Laplacian) of w = r^lam g(theta).

    The theta branch cut lies along the positive x-axis, matching both corner
    domains.  At r = 0 the value and gradient vanish (lam > 1); the Hessian is
    singular there and returned as nan, which is never sampled because
    quadrature points avoid mesh vertices.
    """

    def __init__(self, lam, g, d1, d2, d3):
        self.lam = lam
        self.g = g
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3

    def value(self, pts):
        r, th = _polar(pts)
        return r**self.lam * self.g(th)

    def gradient(self, pts):
        r, th = _polar(pts)
        lam = self.lam
        with np.errstate(divide="ignore", invalid="ignore"):
            rp = np.where(r > 0.0, r ** (lam - 1.0), 0.0)
        ur = lam * rp * self.g(th)
        ut = rp * self.d1(th)
        c, s = np.cos(th), np.sin(th)
        return np.column_stack([ur * c - ut * s, ur * s + ut * c])

    def hessian(self, pts):
        r, th = _polar(pts)
        lam = self.lam
        with np.errstate(divide="ignore", invalid="ignore"):
            rp = np.where(r > 0.0, r ** (lam - 2.0), np.nan)
        g, g1, g2 = self.g(th), self.d1(th), self.d2(th)
        u_rr = lam * (lam - 1.0) * g
        u_rt = lam * g1
        u_tt = g2
        u_r = lam * g
        u_t = g1
        c, s = np.cos(th), np.sin(th)
        h11 = rp * (u_rr * c**2 - 2 * u_rt * c * s + u_tt * s**2
                    + u_r * s**2 + 2 * u_t * c * s)
        h12 = rp * (u_rr * c * s + u_rt * (c**2 - s**2) - u_tt * c * s
                    - u_r * c * s - u_t * (c**2 - s**2))
        h22 = rp * (u_rr * s**2 + 2 * u_rt * c * s + u_tt * c**2
                    + u_r * c**2 - 2 * u_t * c * s)
        return np.column_stack([h11, h12, h22])

    def grad_laplacian(self, pts):
        """Gradient of Delta w; Delta w = r^(lam-2) (lam^2 g + g'')."""
        r, th = _polar(pts)
        lam = self.lam
        m = lam - 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            rp = np.where(r > 0.0, r ** (m - 1.0), np.nan)
        big = lam**2 * self.g(th) + self.d2(th)
        big1 = lam**2 * self.d1(th) + self.d3(th)
        c, s = np.cos(th), np.sin(th)
        return np.column_stack(
            [rp * (m * big * c - big1 * s), rp * (m * big * s + big1 * c)]
        )


# ---------------------------------------------------------------------------
# L-shaped domain: u = r^(5/3) sin(5 theta / 3), biharmonic with f = 0

def lshape_solution():
    lam = 5.0 / 3.0
    term = _SingularTerm(
        lam,
        lambda th: np.sin(lam * th),
        lambda th: lam * np.cos(lam * th),
        lambda th: -(lam**2) * np.sin(lam * th),
        lambda th: -(lam**3) * np.cos(lam * th),
    )
    return Benchmark(
        name="lshape",
        value=term.value,
        gradient=term.gradient,
        hessian=term.hessian,
        source=None,
        sigma=2.0 / 3.0,
        make_mesh=lshape_mesh,
    )


# ---------------------------------------------------------------------------
# Z-shaped domain: u = (1-x^2)^2 (1-y^2)^2 r^(1+z) g(theta), clamped data

def _poly1d_derivs(x):
    """(1-x^2)^2 and its derivatives up to fourth order."""
    a0 = (1.0 - x**2) ** 2
    a1 = -4.0 * x + 4.0 * x**3
    a2 = -4.0 + 12.0 * x**2
    a3 = 24.0 * x
    a4 = np.full_like(x, 24.0)
    return a0, a1, a2, a3, a4


class _ZShapeSolution:
    def __init__(self, profile):
        self.term = _SingularTerm(
            1.0 + profile.z, profile.value, profile.d1, profile.d2, profile.d3
        )

    def _cutoff(self, pts):
        ax = _poly1d_derivs(pts[:, 0])
        by = _poly1d_derivs(pts[:, 1])
        return ax, by

    def value(self, pts):
        ax, by = self._cutoff(pts)
        return ax[0] * by[0] * self.term.value(pts)

    def gradient(self, pts):
        ax, by = self._cutoff(pts)
        w = self.term.value(pts)
        dw = self.term.gradient(pts)
        phi = ax[0] * by[0]
        return np.column_stack(
            [phi * dw[:, 0] + ax[1] * by[0] * w, phi * dw[:, 1] + ax[0] * by[1] * w]
        )

    def hessian(self, pts):
        ax, by = self._cutoff(pts)
        w = self.term.value(pts)
        dw = self.term.gradient(pts)
        hw = self.term.hessian(pts)
        phi = ax[0] * by[0]
        phi_x, phi_y = ax[1] * by[0], ax[0] * by[1]
        h11 = phi * hw[:, 0] + 2 * phi_x * dw[:, 0] + ax[2] * by[0] * w
        h12 = (phi * hw[:, 1] + phi_x * dw[:, 1] + phi_y * dw[:, 0]
               + ax[1] * by[1] * w)
        h22 = phi * hw[:, 2] + 2 * phi_y * dw[:, 1] + ax[0] * by[2] * w
        return np.column_stack([h11, h12, h22])

    def source(self, pts):
        """f = Delta^2 (phi w) expanded with Delta^2 w = 0."""
        ax, by = self._cutoff(pts)
        w = self.term.value(pts)
        dw = self.term.gradient(pts)
        hw = self.term.hessian(pts)
        gdl = self.term.grad_laplacian(pts)
        lap_w = hw[:, 0] + hw[:, 2]
        phi_x, phi_y = ax[1] * by[0], ax[0] * by[1]
        lap_phi = ax[2] * by[0] + ax[0] * by[2]
        hphi = (ax[2] * by[0], ax[1] * by[1], ax[0] * by[2])
        grad_lap_phi_x = ax[3] * by[0] + ax[1] * by[2]
        grad_lap_phi_y = ax[2] * by[1] + ax[0] * by[3]
        bilap_phi = ax[4] * by[0] + 2.0 * ax[2] * by[2] + ax[0] * by[4]
        return (
            4.0 * (phi_x * gdl[:, 0] + phi_y * gdl[:, 1])
            + 2.0 * lap_phi * lap_w
            + 4.0 * (hphi[0] * hw[:, 0] + 2.0 * hphi[1] * hw[:, 1] + hphi[2] * hw[:, 2])
            + 4.0 * (dw[:, 0] * grad_lap_phi_x + dw[:, 1] * grad_lap_phi_y)
            + w * bilap_phi
        )


def zshape_solution(profile=None):
    """Z-shape benchmark; ``profile`` defaults to the shipped transcription."""
    if profile is None:
        profile = CornerProfile()
    sol = _ZShapeSolution(profile)
    return Benchmark(
        name="zshape",
        value=sol.value,
        gradient=sol.gradient,
        hessian=sol.hessian,
        source=sol.source,
        sigma=profile.z,
        make_mesh=zshape_mesh,
    )


# ---------------------------------------------------------------------------
# manufactured smooth verification case on the unit square

def smooth_square_solution():
    """u = sin^2(pi x) sin^2(pi y): a true clamped-plate solution, u = u_n = 0."""
    a = 2.0 * np.pi

    def value(pts):
        return 0.25 * (1 - np.cos(a * pts[:, 0])) * (1 - np.cos(a * pts[:, 1]))

    def gradient(pts):
        cx, cy = np.cos(a * pts[:, 0]), np.cos(a * pts[:, 1])
        sx, sy = np.sin(a * pts[:, 0]), np.sin(a * pts[:, 1])
        return 0.25 * a * np.column_stack([sx * (1 - cy), sy * (1 - cx)])

    def hessian(pts):
        cx, cy = np.cos(a * pts[:, 0]), np.cos(a * pts[:, 1])
        sx, sy = np.sin(a * pts[:, 0]), np.sin(a * pts[:, 1])
        return 0.25 * a**2 * np.column_stack(
            [cx * (1 - cy), sx * sy, cy * (1 - cx)]
        )

    def source(pts):
        cx, cy = np.cos(a * pts[:, 0]), np.cos(a * pts[:, 1])
        return 4.0 * np.pi**4 * (4.0 * cx * cy - cx - cy)

    return Benchmark(
        name="smooth_square",
        value=value,
        gradient=gradient,
        hessian=hessian,
        source=source,
        sigma=1.0,
        make_mesh=lambda: square_grid_mesh(1),
    )


# ---------------------------------------------------------------------------
# quadratic patch problem: exact reproduction up to roundoff

def patch_p2_solution():
    c = np.array([1.0, 0.5, -0.25, 1.0, 0.5, 0.25])  # 1, x, y, x^2, xy, y^2

    def value(pts):
        x, y = pts[:, 0], pts[:, 1]
        return c[0] + c[1] * x + c[2] * y + c[3] * x**2 + c[4] * x * y + c[5] * y**2

    def gradient(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack(
            [c[1] + 2 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2 * c[5] * y]
        )

    def hessian(pts):
        n = len(pts)
        return np.tile([2 * c[3], c[4], 2 * c[5]], (n, 1))

    return Benchmark(
        name="patch_p2",
        value=value,
        gradient=gradient,
        hessian=hessian,
        source=None,
        sigma=1.0,
        make_mesh=lambda: square_grid_mesh(2),
    )


_REGISTRY = {
    "lshape": lshape_solution,
    "zshape": zshape_solution,
    "smooth_square": smooth_square_solution,
    "patch_p2": patch_p2_solution,
}


def get_benchmark(name):
    """Look up a benchmark by registry name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; available: {sorted(_REGISTRY)}"
        ) from None
    return factory()


def benchmark_names():
    return sorted(_REGISTRY)


# ---------------------------------------------------------------------------
# discrete error norms |u - G u_h|_{m,pw}

def error_norms(mesh, solution, bench, degree=quad.DEFAULT_DEGREE):
    """Piecewise H1 and H2 seminorm errors of the projected solution.

    H2 uses the contraction |A|^2 = A11^2 + 2 A12^2 + A22^2; the Hessian of
    G u_h is constant per polygon.
    """
    h1e2 = 0.0
    h2e2 = 0.0
    for pid in range(mesh.n_polygons):
        poly = mesh.polygon(pid)
        coeffs = solution.g_coeffs(pid)
        pts, wts = quad.polygon_points(poly, degree)
        dg = bench.gradient(pts) - quad.p2_gradient(poly, coeffs, pts)
        h1e2 += float(np.dot(wts, np.sum(dg**2, axis=1)))
        dh = bench.hessian(pts) - quad.p2_hessian(poly, coeffs)[None, :]
        h2e2 += float(np.dot(wts, dh[:, 0] ** 2 + 2.0 * dh[:, 1] ** 2 + dh[:, 2] ** 2))
    return float(np.sqrt(h1e2)), float(np.sqrt(h2e2))
