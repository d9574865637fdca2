"""Element-level residual operations and the global weighting identity.

These are the single-element views of the batched kernels in
:mod:`rdflux.discretization`, plus the bounded distribution weights
(``beta_limiter``) and a two-sided check of the algebraic identity that
relates any conservative residual set to its Galerkin core.
"""

from typing import Optional

import numpy as np

from .discretization import Discretization, ResidualSet, SchemeConfig, SchemeError

__all__ = [
    "SchemeConfig",
    "SchemeError",
    "ResidualSet",
    "total_residual",
    "galerkin_residual",
    "supg_residual",
    "jump_residual",
    "dg_residual",
    "rusanov_residual",
    "n_scheme_residual",
    "beta_limiter",
    "limited_stabilized_residual",
    "boundary_residual",
    "fv_median_dual_residual",
    "decomposition_identity_check",
]


def total_residual(disc: Discretization, element: int, u, interpolated=False) -> float:
    """Boundary flux integral of the element: pointwise f(u^h) by default,
    or of the nodal flux interpolant."""
    ue = disc.element_values(u)[[element]]
    if interpolated:
        return float(disc.total_interpolated(ue)[0])
    return float(disc.total_pointwise(ue)[0])


def _one(disc, element, arr):
    return np.asarray(arr)[element].copy()


def galerkin_residual(disc: Discretization, element: int, u) -> np.ndarray:
    return _one(disc, element, disc.galerkin(disc.element_values(u)))


def supg_residual(disc: Discretization, element: int, u, cfg=None) -> np.ndarray:
    cfg = cfg or SchemeConfig("supg")
    return _one(disc, element, disc.supg(disc.element_values(u), cfg))


def jump_residual(disc: Discretization, element: int, u, cfg=None) -> np.ndarray:
    """Galerkin plus gradient-jump penalty (theta_e/2) h_e^2 per face."""
    cfg = cfg or SchemeConfig("jump")
    return _one(disc, element, disc.jumpstab(disc.element_values(u), cfg))


def dg_residual(disc: Discretization, element: int, u) -> np.ndarray:
    return _one(disc, element, disc.dg(u))


def rusanov_residual(disc: Discretization, element: int, u, alpha=None):
    """Returns (residuals, alpha used, c matrix) for one element."""
    cfg = SchemeConfig("rusanov", alpha=alpha)
    res, a, c = disc.rusanov(disc.element_values(u), cfg)
    return res[element].copy(), float(a[element]), c[element].copy()


def n_scheme_residual(disc: Discretization, element: int, u) -> np.ndarray:
    return _one(disc, element, disc.nscheme(disc.element_values(u)))


def beta_limiter(low_order, total, floor=0.0):
    """Bounded distribution weights from a monotone residual split.

    Returns (beta, limited) with beta = max(0, x) / sum(max(0, x)),
    x = low_order / total.  The low-order residuals must sum to ``total``.
    Below ``floor`` the split is bypassed (beta = 0, limited = 0), which
    keeps the distribution conservative in the trivial sense.
    """
    low = np.asarray(low_order, dtype=float)
    if abs(float(np.sum(low)) - total) > 1e-10 * (1.0 + abs(total)):
        raise SchemeError("low-order residuals do not sum to the given total")
    if abs(total) <= floor:
        return np.zeros_like(low), np.zeros_like(low)
    x = low / total
    xp = np.maximum(x, 0.0)
    beta = xp / xp.sum()
    return beta, beta * total


def limited_stabilized_residual(disc: Discretization, element: int, u, cfg=None):
    cfg = cfg or SchemeConfig("limited")
    res, _ = disc.limited(disc.element_values(u), cfg)
    return res[element].copy()


def fv_median_dual_residual(disc: Discretization, element: int, u, interface_flux=None):
    return _one(disc, element, disc.fv_median_dual(disc.element_values(u), interface_flux))


def boundary_residual(disc: Discretization, face: int, u, bc) -> np.ndarray:
    """Residuals of one boundary face (local numbering of its element)."""
    where = np.nonzero(disc.bf_ids == face)[0]
    if len(where) == 0:
        raise SchemeError(f"edge {face} is not a boundary face")
    res, _ = disc.boundary_residuals(u, bc)
    return res[where[0]].copy()


def conservation_defects(rs: ResidualSet):
    """Relative element/boundary conservation defects of a residual set."""
    esum = rs.element.sum(axis=1)
    escale = 1.0 + np.abs(rs.element).sum(axis=1) + np.abs(rs.element_totals)
    edef = np.abs(esum - rs.element_totals) / escale
    bsum = rs.boundary.sum(axis=1)
    bscale = 1.0 + np.abs(rs.boundary).sum(axis=1) + np.abs(rs.boundary_totals)
    bdef = np.abs(bsum - rs.boundary_totals) / bscale
    return edef, bdef


def decomposition_identity_check(
    disc: Discretization, scheme: str, u, v, bc, cfg: Optional[SchemeConfig] = None
) -> float:
    """Two-sided evaluation of the weighted-residual decomposition.

    Left side: sum_sigma v_sigma (assembled residual at sigma).  Right side:
    the volume term of the test function against the scheme's flux
    representation, the domain-boundary terms, the interface-flux jump terms
    (discontinuous layout only), and the pairwise deviation of the scheme
    from its Galerkin core.  Returns the relative defect; it is a pure
    algebraic identity, so the defect is roundoff for any data.
    """
    cfg = cfg or SchemeConfig(scheme)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    lhs = float(np.dot(v, disc.assemble(scheme, u, bc, cfg)))

    ue = disc.element_values(u)
    ve = disc.element_values(v)
    law = disc.law
    interpolated = scheme in ("rusanov", "fv") or (
        scheme.startswith("limited")
        and cfg.resolved_low_order(disc.layout.degree) == "rusanov"
    )

    # volume term -int grad(v).f~ and the per-element Galerkin core
    if interpolated:
        fe = law.flux(ue)
        gal = np.einsum("tex,tdex->td", fe, disc.B)
        ftr = np.einsum("fqd,tdx->tfqx", disc.FV, fe)
        fq = np.einsum("qd,tdx->tqx", disc.V, fe)
    else:
        fq = law.flux(disc.u_at_quad(ue))
        ftr = law.flux(disc.trace_values(ue))
        gal = None
    vol = -np.einsum("tq,tqdx,td,tqx->", disc.Wq, disc.G, ve, fq)

    if scheme == "dg":
        gal = disc.dg(u)
    elif gal is None:
        gal = disc.galerkin(ue)

    # element boundary faces: oint v f~.n on the domain boundary plus
    # interface-flux jump terms on interior faces (discontinuous only)
    vtr = disc.trace_values(ve)
    el, fl = disc.bf_elem, disc.bf_face
    own_boundary = np.einsum(
        "bq,bq,bqx,bx->",
        disc.WF[el, fl],
        vtr[el, fl],
        ftr[el, fl],
        disc.FN[el, fl],
    )
    jump_term = 0.0
    if scheme == "dg":
        uf = disc.trace_values(ue)
        tl, tr = disc.neighbor_trace(uf)
        vl, vr = disc.neighbor_trace(vtr)
        nL = disc.FN[disc.ie_left, disc.ie_fleft]
        w = disc.WF[disc.ie_left, disc.ie_fleft]
        from .problems import rusanov_interface_flux

        fhat = rusanov_interface_flux(law, tl, tr, nL[:, None, :])
        jump_term = float(np.einsum("eq,eq,eq->", w, vl - vr, fhat))
    elif interpolated:
        # single-valued interpolant trace: interior contributions cancel,
        # nothing to add
        pass

    # pairwise deviation terms (1/#K) sum_{s,s'} (v_s - v_s')(Phi_s - Gal_s)
    dev = disc.element_residuals(scheme, u, cfg) - gal
    pair = (ve * dev).sum() - (ve.mean(axis=1) * dev.sum(axis=1)).sum()

    # boundary residuals coincide with their Galerkin core, so the boundary
    # deviation vanishes; their v-weighted sum is the trace integral of the
    # upwind flux mismatch, evaluated here by quadrature
    uf_b = disc.trace_values(ue)[el, fl]
    xy = disc.FXY[el, fl]
    ub = bc(xy[..., 0], xy[..., 1])
    nb = disc.FN[el, fl]
    nq = np.broadcast_to(nb[:, None, :], uf_b.shape + (2,))
    from .problems import outward_boundary_flux

    F = outward_boundary_flux(law, uf_b, ub, nq)
    integrand = F - law.flux_normal(uf_b, nq)
    bterm = float(np.einsum("bq,bq,bq->", disc.WF[el, fl], vtr[el, fl], integrand))

    rhs = vol + own_boundary + jump_term + pair + bterm
    scale = 1.0 + abs(lhs) + abs(rhs)
    return abs(lhs - rhs) / scale
