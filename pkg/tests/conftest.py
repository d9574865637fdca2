import numpy as np
import pytest

from rdflux.basis import DoFLayout, basis_eval
from rdflux.discretization import Discretization
from rdflux.mesh import Mesh
from rdflux.quadrature import edge_quadrature, triangle_quadrature


def unit_right_mesh():
    """Single triangle (0,0), (1,0), (0,1)."""
    return Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]], {})


def random_triangle_mesh(rng, min_area=0.05):
    """One random nondegenerate CCW triangle."""
    while True:
        pts = rng.uniform(-1.0, 1.0, (3, 2))
        d1, d2 = pts[1] - pts[0], pts[2] - pts[0]
        area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        if area < 0:
            pts = pts[[0, 2, 1]]
            area = -area
        if area > min_area:
            return Mesh(pts, [[0, 1, 2]], {})


def two_triangle_mesh():
    """Two triangles sharing the vertical unit edge x = 1, y in [0, 1]."""
    verts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]
    tris = [[0, 1, 3], [1, 2, 3]]
    return Mesh(verts, tris, {})


# -- independent quadrature oracles (scalar loops, no shared tables) ---------


def oracle_volume_integral(mesh, elem, degree, func, rule_degree=4):
    """int_K func(x, bary-interpolated basis) via explicit loops.

    ``func(xy, values, grads)`` returns the integrand given basis values and
    physical gradients at one point.
    """
    rule = triangle_quadrature(rule_degree)
    verts = mesh.element_vertices(elem)
    area = mesh.areas[elem]
    grad_lam = mesh.inward_normals[elem] / (2.0 * area)
    total = 0.0
    for bary, w in zip(rule.points, rule.weights):
        xy = bary @ verts
        vals, gref = basis_eval(degree, bary)
        # physical gradients via barycentric chain rule
        from rdflux.basis import barycentric_partials

        dp = barycentric_partials(degree, bary[None, :])[0]
        grads = dp @ grad_lam
        total = total + 2.0 * area * w * func(xy, vals, grads)
    return total


def oracle_face_integral(mesh, elem, face, degree, func, rule_degree=5):
    """oint over local face of func(xy, basis values, outward unit normal)."""
    rule = edge_quadrature(rule_degree)
    verts = mesh.element_vertices(elem)
    a, b = verts[face], verts[(face + 1) % 3]
    length = np.linalg.norm(b - a)
    opp = (face + 2) % 3
    n_out = -mesh.inward_normals[elem, opp] / length
    total = 0.0
    for t, w in zip(rule.points, rule.weights):
        xy = (1 - t) * a + t * b
        bary = np.zeros(3)
        bary[face] = 1 - t
        bary[(face + 1) % 3] = t
        vals, _ = basis_eval(degree, bary)
        total = total + length * w * func(xy, vals, n_out)
    return total


def make_disc(mesh, law, degree=1, continuous=True):
    layout = DoFLayout(mesh, degree, continuous=continuous)
    return Discretization(mesh, layout, law)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
