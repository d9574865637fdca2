"""Quadrature rules on the reference triangle and the reference edge [0, 1].

Triangle rules are given in barycentric coordinates with weights summing to
the reference area 1/2.  Edge rules are Gauss-Legendre points on [0, 1] with
weights summing to 1.  All element/face integrals in the package go through
these two rule families so that algebraic identities between assembled
quantities hold to machine precision.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights; ``points`` is (n, 3) barycentric or (n,) edge params."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))


def _tri_rule_centroid():
    return np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([0.5])


def _tri_rule_deg2():
    pts = np.array(
        [
            [2 / 3, 1 / 6, 1 / 6],
            [1 / 6, 2 / 3, 1 / 6],
            [1 / 6, 1 / 6, 2 / 3],
        ]
    )
    return pts, np.full(3, 1 / 6)


def _tri_rule_deg4():
    # 6-point rule, exact through degree 4.
    a1, a2 = 0.816847572980459, 0.091576213509771
    b1, b2 = 0.108103018168070, 0.445948490915965
    w1, w2 = 0.054975871827661, 0.111690794839005
    pts = np.array(
        [
            [a1, a2, a2],
            [a2, a1, a2],
            [a2, a2, a1],
            [b1, b2, b2],
            [b2, b1, b2],
            [b2, b2, b1],
        ]
    )
    w = np.array([w1, w1, w1, w2, w2, w2])
    return pts, w * (0.5 / w.sum())  # renormalize the 15-digit table constants


def _tri_rule_deg5():
    # 7-point rule (centroid + two symmetric orbits), exact through degree 5.
    s = np.sqrt(15.0)
    g1 = (6.0 - s) / 21.0
    g2 = (6.0 + s) / 21.0
    w1 = (155.0 - s) / 2400.0
    w2 = (155.0 + s) / 2400.0
    pts = [[1 / 3, 1 / 3, 1 / 3]]
    wts = [9.0 / 80.0]
    for g, w in ((g1, w1), (g2, w2)):
        pts += [[1 - 2 * g, g, g], [g, 1 - 2 * g, g], [g, g, 1 - 2 * g]]
        wts += [w, w, w]
    return np.array(pts), np.array(wts)


_TRI_RULES = {
    0: _tri_rule_centroid,
    1: _tri_rule_centroid,
    2: _tri_rule_deg2,
    3: _tri_rule_deg4,
    4: _tri_rule_deg4,
    5: _tri_rule_deg5,
}

MAX_TRIANGLE_DEGREE = max(_TRI_RULES)
MAX_EDGE_DEGREE = 21


def triangle_quadrature(exactness_degree: int) -> QuadratureRule:
    """Rule on the reference triangle exact for polynomials of the given degree."""
    if exactness_degree < 0 or exactness_degree > MAX_TRIANGLE_DEGREE:
        raise ValueError(
            f"no triangle rule tabulated for degree {exactness_degree} "
            f"(supported: 0..{MAX_TRIANGLE_DEGREE})"
        )
    pts, w = _TRI_RULES[exactness_degree]()
    return QuadratureRule(pts, w, exactness_degree)


def edge_quadrature(exactness_degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of the given degree."""
    if exactness_degree < 0 or exactness_degree > MAX_EDGE_DEGREE:
        raise ValueError(
            f"no edge rule for degree {exactness_degree} "
            f"(supported: 0..{MAX_EDGE_DEGREE})"
        )
    npts = exactness_degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(npts)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * npts - 1)
