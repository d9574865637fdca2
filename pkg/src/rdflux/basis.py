"""Lagrange basis functions on triangles and degree-of-freedom layouts.

Degrees 1 and 2 are supported.  Local node ordering is the three vertices
counterclockwise followed, for degree 2, by the edge midpoints: node 4 on
edge 1-2, node 5 on edge 2-3, node 6 on edge 3-1 (0-based: 3, 4, 5).

Reference coordinates are barycentric (l1, l2, l3); reference gradients are
taken with respect to (x, y) on the unit triangle (0,0)-(1,0)-(0,1), where
l = (1-x-y, x, y).
"""

import numpy as np

from .mesh import Mesh

# Gradients of the barycentric coordinates on the reference triangle.
_GRAD_LAMBDA_REF = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

SUPPORTED_DEGREES = (1, 2)


def dofs_per_element(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def basis_eval(degree: int, bary) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate shape functions at one barycentric point.

    Returns ``(values, gradients)`` with values of shape (ndof,) and
    gradients of shape (ndof, 2), the gradients with respect to the
    reference-triangle coordinates.
    """
    bary = np.asarray(bary, dtype=float)
    if bary.shape != (3,):
        raise ValueError("expected a single barycentric point of shape (3,)")
    vals, grads = basis_eval_many(degree, bary[None, :])
    return vals[0], grads[0]


def basis_eval_many(degree: int, bary: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized basis evaluation; ``bary`` is (n, 3), returns (n, ndof) and (n, ndof, 2)."""
    bary = np.asarray(bary, dtype=float)
    l1, l2, l3 = bary[:, 0], bary[:, 1], bary[:, 2]
    n = bary.shape[0]
    if degree == 1:
        vals = bary.copy()
        grads = np.broadcast_to(_GRAD_LAMBDA_REF, (n, 3, 2)).copy()
        return vals, grads
    if degree == 2:
        vals = np.empty((n, 6))
        vals[:, 0] = l1 * (2 * l1 - 1)
        vals[:, 1] = l2 * (2 * l2 - 1)
        vals[:, 2] = l3 * (2 * l3 - 1)
        vals[:, 3] = 4 * l1 * l2
        vals[:, 4] = 4 * l2 * l3
        vals[:, 5] = 4 * l3 * l1
        # dphi/dlambda_i, then chain rule through the reference lambdas
        dl = np.zeros((n, 6, 3))
        dl[:, 0, 0] = 4 * l1 - 1
        dl[:, 1, 1] = 4 * l2 - 1
        dl[:, 2, 2] = 4 * l3 - 1
        dl[:, 3, 0] = 4 * l2
        dl[:, 3, 1] = 4 * l1
        dl[:, 4, 1] = 4 * l3
        dl[:, 4, 2] = 4 * l2
        dl[:, 5, 2] = 4 * l1
        dl[:, 5, 0] = 4 * l3
        grads = dl @ _GRAD_LAMBDA_REF
        return vals, grads
    raise ValueError(f"unsupported polynomial degree {degree}")


def barycentric_partials(degree: int, bary: np.ndarray) -> np.ndarray:
    """dphi/dlambda_i at each point; shape (n, ndof, 3).  Used to map gradients
    to physical space via the per-element barycentric gradients."""
    bary = np.asarray(bary, dtype=float)
    n = bary.shape[0]
    if degree == 1:
        out = np.zeros((n, 3, 3))
        out[:] = np.eye(3)
        return out
    if degree == 2:
        l1, l2, l3 = bary[:, 0], bary[:, 1], bary[:, 2]
        out = np.zeros((n, 6, 3))
        out[:, 0, 0] = 4 * l1 - 1
        out[:, 1, 1] = 4 * l2 - 1
        out[:, 2, 2] = 4 * l3 - 1
        out[:, 3, 0] = 4 * l2
        out[:, 3, 1] = 4 * l1
        out[:, 4, 1] = 4 * l3
        out[:, 4, 2] = 4 * l2
        out[:, 5, 2] = 4 * l1
        out[:, 5, 0] = 4 * l3
        return out
    raise ValueError(f"unsupported polynomial degree {degree}")


def reference_nodes(degree: int) -> np.ndarray:
    """Barycentric coordinates of the local Lagrange nodes, shape (ndof, 3)."""
    verts = np.eye(3)
    if degree == 1:
        return verts
    if degree == 2:
        mids = np.array(
            [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]
        )
        return np.vstack([verts, mids])
    raise ValueError(f"unsupported polynomial degree {degree}")


class DoFLayout:
    """Global numbering of Lagrange degrees of freedom on a mesh.

    Continuous layouts share vertex (and, for degree 2, edge-midpoint) DoFs
    between elements; discontinuous layouts give every element its own block
    of ``ndof_elem`` consecutive DoFs.
    """

    def __init__(self, mesh: Mesh, degree: int, continuous: bool = True):
        if degree not in SUPPORTED_DEGREES:
            raise ValueError(f"unsupported polynomial degree {degree}")
        self.mesh = mesh
        self.degree = degree
        self.continuous = continuous
        self.ndof_elem = dofs_per_element(degree)
        nt = mesh.num_triangles

        if continuous:
            if degree == 1:
                self.element_dofs = mesh.triangles.copy()
                self.num_dofs = mesh.num_vertices
                self.dof_coords = mesh.vertices.copy()
            else:
                # midpoint DoF of local face f lives on mesh edge face_edge[t, f]
                nv = mesh.num_vertices
                self.element_dofs = np.hstack(
                    [mesh.triangles, nv + mesh.face_edge]
                )
                self.num_dofs = nv + mesh.num_edges
                everts = mesh.vertices[mesh.edge_vertices]
                self.dof_coords = np.vstack(
                    [mesh.vertices, 0.5 * (everts[:, 0] + everts[:, 1])]
                )
        else:
            self.element_dofs = np.arange(nt * self.ndof_elem).reshape(
                nt, self.ndof_elem
            )
            self.num_dofs = nt * self.ndof_elem
            nodes = reference_nodes(degree)
            tri_xy = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
            self.dof_coords = np.einsum("di,tix->tdx", nodes, tri_xy).reshape(
                self.num_dofs, 2
            )

    def element_values(self, u: np.ndarray) -> np.ndarray:
        """Gather a global DoF vector into per-element local vectors (nt, ndof)."""
        return np.asarray(u)[self.element_dofs]

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant of ``func(x, y)`` as a global DoF vector."""
        return np.asarray(func(self.dof_coords[:, 0], self.dof_coords[:, 1]), dtype=float)
