"""Discontinuous degree-1 scheme built from element and edge total residuals.

Each triangle carries its own three vertex DoFs.  The element total residual
is the boundary integral of the flux using the element's own trace; each
interior edge carries the integral of the normal-flux jump.  Both totals are
split by a dissipative average (first order) or by the bounded distribution
weights (second order).  Domain-boundary edges use the weak upwind boundary
residuals.

The edge split couples the four trace DoFs adjacent to the edge: the two
endpoint DoFs seen from each side.
"""

from dataclasses import dataclass

import numpy as np

from .basis import DoFLayout
from .discretization import Discretization, SchemeConfig, SchemeError
from .mesh import Mesh
from .problems import ConservationLaw


@dataclass
class SplitResidualSet:
    """Per-element and per-interior-edge residual splits with the
    dissipation coefficients used."""

    element: np.ndarray  # (nt, 3)
    edge: np.ndarray  # (nie, 4) over [L0, L1, R0, R1]
    element_totals: np.ndarray
    edge_totals: np.ndarray
    alpha_elem: np.ndarray
    alpha_edge: np.ndarray


class DgRds:
    """Assembly helper for the split-total scheme on a discontinuous layout."""

    def __init__(self, mesh: Mesh, law: ConservationLaw, **quad):
        self.mesh = mesh
        self.law = law
        self.layout = DoFLayout(mesh, 1, continuous=False)
        self.disc = Discretization(mesh, self.layout, law, **quad)
        d = self.disc
        # the four trace DoFs of each interior edge: endpoints from each side
        fl, fr = d.ie_fleft, d.ie_fright
        eL, eR = d.ie_left, d.ie_right
        dofs = self.layout.element_dofs
        self.edge_dofs = np.stack(
            [
                dofs[eL, fl],
                dofs[eL, (fl + 1) % 3],
                dofs[eR, fr],
                dofs[eR, (fr + 1) % 3],
            ],
            axis=1,
        )

    # -- totals -----------------------------------------------------------

    def element_totals(self, u):
        return self.disc.total_pointwise(self.disc.element_values(u))

    def edge_totals(self, u):
        """oint over each interior edge of the normal-flux jump (right state
        minus left state through the left element's outward normal)."""
        d = self.disc
        uf = d.trace_values(d.element_values(u))
        tl, tr = d.neighbor_trace(uf)
        n = d.FN[d.ie_left, d.ie_fleft]
        w = d.WF[d.ie_left, d.ie_fleft]
        jump = self.law.flux_normal(tr, n[:, None, :]) - self.law.flux_normal(
            tl, n[:, None, :]
        )
        return np.einsum("eq,eq->e", w, jump)

    # -- dissipation coefficients ------------------------------------------

    def _jac_norm(self, u):
        j = self.law.jacobian(np.asarray(u, dtype=float))
        return np.linalg.norm(j, axis=-1)

    def alpha_element(self, u, override=None):
        """max ||jacobian|| over the element (linear data attains the max at
        the vertices), with a 1.01 safety factor when auto-selected; user
        overrides are floored at the bound itself."""
        ue = self.disc.element_values(u)
        bound = self._jac_norm(ue).max(axis=1)
        if override is None:
            return 1.01 * bound
        return np.maximum(bound, override)

    def alpha_edge(self, u, override=None):
        states = np.asarray(u)[self.edge_dofs]
        bound = self._jac_norm(states).max(axis=1)
        if override is None:
            return 1.01 * bound
        return np.maximum(bound, override)

    # -- splits ------------------------------------------------------------

    def element_split(self, u, alpha=None):
        ue = self.disc.element_values(u)
        tot = self.element_totals(u)
        a = self.alpha_element(u, alpha)
        ubar = ue.mean(axis=1)
        return tot[:, None] / 3.0 + a[:, None] * (ue - ubar[:, None]), tot, a

    def edge_split(self, u, alpha=None):
        states = np.asarray(u)[self.edge_dofs]  # (nie, 4)
        tot = self.edge_totals(u)
        a = self.alpha_edge(u, alpha)
        ubar = states.mean(axis=1)
        return tot[:, None] / 4.0 + a[:, None] * (states - ubar[:, None]), tot, a

    def split_residuals(self, u, alpha_k=None, alpha_g=None) -> SplitResidualSet:
        elem, etot, ak = self.element_split(u, alpha_k)
        edge, gtot, ag = self.edge_split(u, alpha_g)
        return SplitResidualSet(elem, edge, etot, gtot, ak, ag)

    def _limit(self, split, totals, floors):
        active = np.abs(totals) > floors
        x = np.zeros_like(split)
        x[active] = split[active] / totals[active, None]
        xp = np.maximum(x, 0.0)
        beta = np.zeros_like(split)
        sump = xp.sum(axis=1)
        beta[active] = xp[active] / sump[active, None]
        return beta * totals[:, None]

    def assemble(self, u, bc, limited=False, alpha_k=None, alpha_g=None):
        """Global nodal residual vector: element splits + edge splits +
        boundary residuals."""
        d = self.disc
        srs = self.split_residuals(u, alpha_k, alpha_g)
        elem, edge = srs.element, srs.edge
        if limited:
            floor_e = d.limiter_floor(d.element_values(u))
            elem = self._limit(elem, srs.element_totals, floor_e)
            fmax = np.abs(self.law.flux(np.asarray(u)[self.edge_dofs])).max(axis=(1, 2))
            floor_g = 1e-14 * (1.0 + fmax * d.ie_len)
            edge = self._limit(edge, srs.edge_totals, floor_g)
        out = np.zeros(self.layout.num_dofs)
        np.add.at(out, self.layout.element_dofs, elem)
        np.add.at(out, self.edge_dofs, edge)
        bres, _ = d.boundary_residuals(u, bc)
        np.add.at(out, self.layout.element_dofs[d.bf_elem], bres)
        return out

    # -- step-size coefficient bounds ---------------------------------------

    def coefficient_sums(self, u, alpha_k=None, alpha_g=None):
        """Safe per-DoF bound on the monotone coupling coefficients."""
        d = self.disc
        ue = d.element_values(u)
        ak = self.alpha_element(u, alpha_k)
        jmax_k = self._jac_norm(ue).max(axis=1)
        csum_k = (2.0 / 3.0) * ak + (1.0 / 3.0) * jmax_k * self.mesh.perimeters
        out = np.zeros(self.layout.num_dofs)
        np.add.at(
            out,
            self.layout.element_dofs,
            np.broadcast_to(csum_k[:, None], ue.shape),
        )
        ag = self.alpha_edge(u, alpha_g)
        jmax_g = self._jac_norm(np.asarray(u)[self.edge_dofs]).max(axis=1)
        csum_g = 0.75 * ag + 0.5 * jmax_g * d.ie_len
        np.add.at(
            out,
            self.edge_dofs,
            np.broadcast_to(csum_g[:, None], self.edge_dofs.shape),
        )
        el, fl = d.bf_elem, d.bf_face
        uf = d.trace_values(ue)[el, fl]
        speed = np.abs(np.einsum("bqx,bx->bq", self.law.jacobian(uf), d.FN[el, fl]))
        bsum = np.einsum("bq,bqd,bq->bd", d.WF[el, fl], d.FV[fl], speed)
        np.add.at(out, self.layout.element_dofs[el], bsum)
        return out

    def stencil_bounds(self, u, bc_values=None):
        """Per-DoF min/max over the coupling stencil (element, its edges'
        four-DoF sets, and boundary data where attached)."""
        u = np.asarray(u, dtype=float)
        lo = np.full(self.layout.num_dofs, np.inf)
        hi = np.full(self.layout.num_dofs, -np.inf)
        ue = u[self.layout.element_dofs]
        emin, emax = ue.min(axis=1), ue.max(axis=1)
        for d in range(3):
            idx = self.layout.element_dofs[:, d]
            np.minimum.at(lo, idx, emin)
            np.maximum.at(hi, idx, emax)
        se = u[self.edge_dofs]
        smin, smax = se.min(axis=1), se.max(axis=1)
        for d in range(4):
            idx = self.edge_dofs[:, d]
            np.minimum.at(lo, idx, smin)
            np.maximum.at(hi, idx, smax)
        if bc_values is not None:
            dd = self.disc
            xy = dd.FXY[dd.bf_elem, dd.bf_face]
            ub = bc_values(xy[..., 0], xy[..., 1])
            bmin, bmax = ub.min(axis=1), ub.max(axis=1)
            for d in range(3):
                idx = self.layout.element_dofs[dd.bf_elem, d]
                np.minimum.at(lo, idx, bmin)
                np.maximum.at(hi, idx, bmax)
        return lo, hi


# -- spec-level operations ---------------------------------------------------


def edge_total_residual(dg: DgRds, edge: int, u) -> float:
    """Total residual of one interior mesh edge."""
    pos = np.nonzero(dg.disc.ie_ids == edge)[0]
    if len(pos) == 0:
        raise SchemeError(f"edge {edge} is not an interior edge")
    return float(dg.edge_totals(u)[pos[0]])


def rusanov_split_element(dg: DgRds, element: int, u, alpha=None) -> np.ndarray:
    split, _, _ = dg.element_split(u, alpha)
    return split[element].copy()


def rusanov_split_edge(dg: DgRds, edge: int, u, alpha=None) -> np.ndarray:
    pos = np.nonzero(dg.disc.ie_ids == edge)[0]
    if len(pos) == 0:
        raise SchemeError(f"edge {edge} is a boundary face; use the weak "
                          "boundary residuals there")
    split, _, _ = dg.edge_split(u, alpha)
    return split[pos[0]].copy()


def limited_split(total: float, low_order, floor=0.0):
    """Shared bounded-distribution map applied to one split."""
    from .residuals import beta_limiter

    return beta_limiter(low_order, total, floor)


def assemble_dg_rds(dg: DgRds, u, bc, limited=False) -> np.ndarray:
    return dg.assemble(u, bc, limited=limited)
