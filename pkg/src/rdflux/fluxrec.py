"""Locally conservative flux recovery on an element's DoF graph.

Given residuals Phi_sigma and per-DoF boundary fluxes fb_sigma with
sum(Phi) = sum(fb), the antisymmetric edge fluxes solve A fhat = Psi with
Psi = Phi - fb and A the incidence matrix of the oriented DoF graph
(+1 tail, -1 head).  The minimum-norm solution A^T L^+ Psi (L = A A^T the
graph Laplacian) is computed by a rank-one-shifted dense solve; it is the
unique solution orthogonal to the cycle space of the graph.

Degree 1 uses the cyclic triangle graph; degree 2 triangulates the six
Lagrange nodes into four subtriangles, giving nine directed edges.
"""

from dataclasses import dataclass

import numpy as np

from .discretization import Discretization, SchemeConfig
from .problems import rusanov_interface_flux


class ConservationError(ValueError):
    """Raised when residuals and boundary fluxes are not compatible."""


_P1_EDGES = ((0, 1), (1, 2), (2, 0))
# nodes: 3 vertices then midpoints 4(1-2), 5(2-3), 6(3-1); 0-based below
_P2_EDGES = (
    (0, 3),
    (0, 5),
    (3, 5),
    (4, 3),
    (3, 1),
    (1, 4),
    (4, 2),
    (5, 2),
    (5, 4),
)
# directed cycles of the four subtriangles, as signed edge-index vectors
_P2_CYCLES = (
    ((0, 1), (2, 1), (1, -1)),
    ((4, 1), (5, 1), (3, 1)),
    ((8, 1), (6, 1), (7, -1)),
    ((2, 1), (8, 1), (3, 1)),
)


@dataclass(frozen=True)
class ElementGraph:
    degree: int
    edges: tuple
    A: np.ndarray  # (ndof, nedges) incidence matrix
    P: np.ndarray  # (nedges, ndof) minimum-norm solve operator A^T L^+
    cycles: np.ndarray  # (ncycles, nedges) basis of the cycle space

    @property
    def num_dofs(self):
        return self.A.shape[0]

    @property
    def num_edges(self):
        return self.A.shape[1]


def build_graph(degree: int) -> ElementGraph:
    if degree == 1:
        edges = _P1_EDGES
        cycles = np.ones((1, 3))
    elif degree == 2:
        edges = _P2_EDGES
        cycles = np.zeros((4, 9))
        for i, cyc in enumerate(_P2_CYCLES):
            for j, s in cyc:
                cycles[i, j] = s
    else:
        raise ValueError(f"no DoF graph for degree {degree}")
    n = max(max(e) for e in edges) + 1
    A = np.zeros((n, len(edges)))
    for j, (tail, head) in enumerate(edges):
        A[tail, j] = 1.0
        A[head, j] = -1.0
    L = A @ A.T
    shifted = L + np.ones((n, n)) / n
    P = A.T @ np.linalg.inv(shifted)
    return ElementGraph(degree, tuple(edges), A, P, cycles)


GRAPH_P1 = build_graph(1)
GRAPH_P2 = build_graph(2)


def _check_zero_sum(psi, tol_factor=1e-11):
    psi = np.asarray(psi, dtype=float)
    total = float(np.abs(psi.sum(axis=-1)).max())
    norm = float(np.abs(psi).sum(axis=-1).max())
    if total > tol_factor * (1.0 + norm):
        raise ConservationError(
            f"residual/boundary-flux mismatch: |sum(Psi)| = {total:g} "
            f"exceeds {tol_factor:g} * (1 + |Psi|)"
        )
    return psi


def recover_fluxes(psi, graph: ElementGraph) -> np.ndarray:
    """Minimum-norm edge fluxes with A fhat = Psi; requires sum(Psi) ~ 0."""
    psi = _check_zero_sum(psi)
    return psi @ graph.P.T


def recover_normals(nvec, graph: ElementGraph) -> np.ndarray:
    """Edge normals n_e with A n = N, applied componentwise to the per-DoF
    boundary moments N_sigma = oint(phi_sigma n); requires sum(N) ~ 0."""
    nvec = np.asarray(nvec, dtype=float)
    total = np.abs(nvec.sum(axis=-2)).max()
    if total > 1e-11 * (1.0 + np.abs(nvec).sum()):
        raise ConservationError("boundary moments do not sum to zero")
    return np.einsum("ed,...dx->...ex", graph.P, nvec)


def p1_explicit_fluxes(psi) -> np.ndarray:
    """Closed-form minimum-norm solve on the cyclic triangle graph."""
    psi = _check_zero_sum(np.asarray(psi, dtype=float))
    p1, p2, p3 = psi[..., 0], psi[..., 1], psi[..., 2]
    return np.stack([(p1 - p2) / 3.0, (p2 - p3) / 3.0, (p3 - p1) / 3.0], axis=-1)


def p2_explicit_fluxes(psi) -> np.ndarray:
    """Nine-entry closed-form flux table for the degree-2 graph.

    Transcribed verbatim from its published source; it is NOT asserted to
    solve A fhat = Psi -- use :func:`p2_table_defects` to compare it with the
    general recovery.
    """
    psi = _check_zero_sum(np.asarray(psi, dtype=float))
    p1, p2, p3, p4, p5, p6 = (psi[..., i] for i in range(6))
    f14 = (p1 - p4) / 12 + (p6 - p5) / 36 + 7 * (p1 - p2) / 36 + 5 * (p3 - p1) / 36
    f16 = (p4 - p1) / 12 + 5 * (p5 - p1) / 36 + 7 * (p6 - p1) / 36 + (p3 - p2) / 36
    f46 = 2 * (p2 - p6) / 9 + (p3 - p5) / 9
    f54 = 2 * (p5 - p2) / 9 + (p5 - p1) / 9
    f42 = 7 * (p2 - p3) / 36 + 5 * (p1 - p3) / 36 + (p6 - p3) / 12 + (p5 - p4) / 36
    f25 = (p2 - p1) / 36 + 5 * (p3 - p5) / 36 + 7 * (p3 - p5) / 36 + (p3 - p6) / 12
    f53 = (p1 - p6) / 36 + 5 * (p3 - p5) / 36 + 7 * (p4 - p5) / 36 + (p2 - p5) / 12
    f63 = (p4 - p3) / 36 + 5 * (p5 - p1) / 36 + 7 * (p5 - p6) / 36 + (p5 - p2) / 12
    f65 = (p1 - p3) / 9 + 2 * (p6 - p4) / 9
    return np.stack([f14, f16, f46, f54, f42, f25, f53, f63, f65], axis=-1)


def p2_table_defects(psi):
    """Per-DoF defect A fhat_table - Psi and the distance to the general
    minimum-norm solve, for cross-checking the closed-form table."""
    psi = np.asarray(psi, dtype=float)
    table = p2_explicit_fluxes(psi)
    general = recover_fluxes(psi, GRAPH_P2)
    defect = table @ GRAPH_P2.A.T - psi
    return defect, table - general


# -- scheme-facing helpers -------------------------------------------------


def flux_representation(scheme: str, cfg: SchemeConfig, degree: int) -> str:
    """Which flux trace enters the per-DoF boundary fluxes of a scheme."""
    if scheme == "dg":
        return "dg"
    if scheme in ("rusanov", "fv"):
        return "interpolated"
    if scheme.startswith("limited") and cfg.resolved_low_order(degree) == "rusanov":
        return "interpolated"
    return "pointwise"


def boundary_dof_fluxes_all(disc: Discretization, u, representation="pointwise"):
    """Per-DoF boundary fluxes oint(phi_sigma fhat_n) for all elements."""
    ue = disc.element_values(u)
    if representation == "pointwise":
        ff = disc.law.flux(disc.trace_values(ue))
        return np.einsum("tfq,fqd,tfqx,tfx->td", disc.WF, disc.FV, ff, disc.FN)
    if representation == "interpolated":
        fe = disc.law.flux(ue)
        ftr = np.einsum("fqd,tdx->tfqx", disc.FV, fe)
        return np.einsum("tfq,fqd,tfqx,tfx->td", disc.WF, disc.FV, ftr, disc.FN)
    if representation == "dg":
        ff = disc.law.flux(disc.trace_values(ue))
        out = np.einsum("tfq,fqd,tfqx,tfx->td", disc.WF, disc.FV, ff, disc.FN)
        uf = disc.trace_values(ue)
        tl, tr = disc.neighbor_trace(uf)
        nL = disc.FN[disc.ie_left, disc.ie_fleft]
        w = disc.WF[disc.ie_left, disc.ie_fleft]
        fhat = rusanov_interface_flux(disc.law, tl, tr, nL[:, None, :])
        own_L = disc.law.flux_normal(tl, nL[:, None, :])
        own_R = disc.law.flux_normal(tr, nL[:, None, :])
        phi_l = disc.FV[disc.ie_fleft]
        phi_r = disc.FV[disc.ie_fright][:, ::-1]
        np.add.at(out, disc.ie_left, np.einsum("eq,eqd,eq->ed", w, phi_l, fhat - own_L))
        np.add.at(
            out, disc.ie_right, np.einsum("eq,eqd,eq->ed", w, phi_r, -(fhat - own_R))
        )
        return out
    raise ValueError(f"unknown flux representation {representation!r}")


def boundary_dof_fluxes(disc: Discretization, element: int, u, representation="pointwise"):
    return boundary_dof_fluxes_all(disc, u, representation)[element].copy()


def recover_scheme_fluxes(disc: Discretization, scheme: str, u, cfg=None):
    """Edge fluxes of a scheme on every element.

    Returns (fluxes (nt, nedges), psi (nt, ndof), fb (nt, ndof)); the fluxes
    satisfy A fhat = Phi - fb per element.
    """
    cfg = cfg or SchemeConfig(scheme)
    graph = build_graph(disc.layout.degree)
    rep = flux_representation(scheme, cfg, disc.layout.degree)
    fb = boundary_dof_fluxes_all(disc, u, rep)
    phi = disc.element_residuals(scheme, u, cfg)
    psi = _check_zero_sum(phi - fb)
    fluxes = psi @ graph.P.T
    return fluxes, psi, fb


def dual_interface_normals(disc: Discretization, graph=None):
    """Physical interface normals between DoFs, oriented tail -> head.

    These are the negatives of the A n = N solve; for degree 1 they are the
    scaled normals of the median-dual interfaces.  Constant-state recovered
    fluxes equal f(u) dotted with these normals.
    """
    graph = graph or build_graph(disc.layout.degree)
    nrec = np.einsum("ed,tdx->tex", graph.P, disc.Nmom)
    return -nrec


def recovered_dof_normals(disc: Discretization, graph=None):
    """The componentwise solve A n = N of the per-DoF boundary moments."""
    graph = graph or build_graph(disc.layout.degree)
    return np.einsum("ed,tdx->tex", graph.P, disc.Nmom)


def rusanov_flux_form(disc: Discretization, element: int, u, alpha=None):
    """Closed-form edge fluxes of the dissipative central scheme (degree 1):
    mean interpolated flux dotted with the dual-interface normal plus
    (alpha/3) times the state difference along each directed edge."""
    if disc.layout.degree != 1:
        raise ValueError("closed-form dissipative fluxes require degree 1")
    ue = disc.element_values(u)
    if alpha is None:
        _, a_auto, _ = disc.rusanov(ue, SchemeConfig("rusanov"))
        alpha = float(a_auto[element])
    fbar = disc.law.flux(ue[element]).mean(axis=0)
    m = disc.median_dual_normals()[element]
    un = ue[element]
    out = np.empty(3)
    for j, (t, h) in enumerate(_P1_EDGES):
        out[j] = fbar @ m[j] + (alpha / 3.0) * (un[t] - un[h])
    return out


def dg_flux_form(disc: Discretization, element: int, u, neighbor_traces=None):
    """Closed-form edge fluxes of the discontinuous Galerkin scheme
    (degree 1): element-mean flux dotted with the dual-interface normals.

    With the per-DoF boundary fluxes carrying the whole interface
    dissipation, the recovered interior fluxes reduce to the centered part;
    ``neighbor_traces`` is accepted for signature compatibility and does not
    enter the result.
    """
    if disc.layout.degree != 1:
        raise ValueError("closed-form dg fluxes require degree 1")
    ue = disc.element_values(u)[element]
    uq = disc.V @ ue
    fmean = np.einsum("q,qx->x", disc.Wq[element], disc.law.flux(uq)) / (
        disc.mesh.areas[element]
    )
    m = disc.median_dual_normals()[element]
    return m @ fmean
