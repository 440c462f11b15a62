"""Nonconforming virtual element method for the biharmonic equation on polygonal meshes.

The package provides a polygonal mesh with midpoint-to-centroid refinement and
hanging-node closure, the lowest-order (Morley-type) virtual element
discretization built entirely from degrees of freedom, a residual a posteriori
error estimator, and an adaptive Solve/Estimate/Mark/Refine loop with the
benchmark problems used in the convergence studies.
"""

from .mesh import Mesh, MeshError, build_mesh, refine, uniform_refine
from .element import LocalElement, build_projector, local_matrices
from .system import DofMap, build_dof_map, assemble, solve
from .estimator import estimate, oscillation
from .adaptive import dorfler_mark, run_adaptive, run_uniform
from .bench import get_benchmark

__all__ = [
    "Mesh",
    "MeshError",
    "build_mesh",
    "refine",
    "uniform_refine",
    "LocalElement",
    "build_projector",
    "local_matrices",
    "DofMap",
    "build_dof_map",
    "assemble",
    "solve",
    "estimate",
    "oscillation",
    "dorfler_mark",
    "run_adaptive",
    "run_uniform",
    "get_benchmark",
]
