"""Vectorized residual evaluation for all distribution schemes.

A :class:`Discretization` bundles a mesh, a DoF layout, a conservation law
and fixed quadrature rules, and precomputes every geometric table needed to
evaluate per-element residuals for whole meshes at once.  The per-element
operations exposed in :mod:`rdflux.residuals` are thin views into these
batched kernels, so library code and audits share one set of numbers.

Scheme names: ``galerkin``, ``supg``, ``jump``, ``dg``, ``rusanov``,
``nscheme``, ``limited``, ``limited-supg``, ``limited-jump``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import DoFLayout, barycentric_partials, basis_eval_many
from .mesh import Mesh
from .problems import ConservationLaw, outward_boundary_flux, rusanov_interface_flux
from .quadrature import edge_quadrature, triangle_quadrature

CONTINUOUS_SCHEMES = (
    "galerkin",
    "supg",
    "jump",
    "rusanov",
    "nscheme",
    "fv",
    "limited",
    "limited-supg",
    "limited-jump",
)
SCHEMES = CONTINUOUS_SCHEMES + ("dg",)

DEFAULT_TRI_DEGREE = 4
DEFAULT_EDGE_DEGREE = 5


class SchemeError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    """Tunable scheme parameters.

    theta_e and theta_k must be nonnegative; alpha, when given, is floored at
    the per-element monotonicity bound.  ``low_order`` selects the monotone
    residual feeding the bounded distribution weights ('auto' picks the
    upwind scheme for degree 1 and the dissipative one for degree 2).
    """

    scheme: str = "nscheme"
    theta_e: float = 0.01
    theta_k: float = 1.0
    alpha: Optional[float] = None
    low_order: str = "auto"

    def __post_init__(self):
        if self.theta_e < 0 or self.theta_k < 0:
            raise SchemeError("theta_e and theta_k must be >= 0")
        if self.scheme not in SCHEMES:
            raise SchemeError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")

    def resolved_low_order(self, degree: int) -> str:
        if self.low_order != "auto":
            return self.low_order
        return "nscheme" if degree == 1 else "rusanov"


@dataclass
class ResidualSet:
    """Per-element and per-boundary-face residuals for one scheme.

    ``element`` has shape (num_triangles, ndof_elem); ``boundary`` has shape
    (num_boundary_faces, ndof_elem) in the local numbering of the adjacent
    element.  ``element_totals``/``boundary_totals`` hold the flux integrals
    each group must sum to.
    """

    scheme: str
    element: np.ndarray
    boundary: np.ndarray
    element_totals: np.ndarray
    boundary_totals: np.ndarray


class Discretization:
    """Precomputed tables and batched residual kernels for one mesh/layout/law."""

    def __init__(
        self,
        mesh: Mesh,
        layout: DoFLayout,
        law: ConservationLaw,
        tri_degree: int = DEFAULT_TRI_DEGREE,
        edge_degree: int = DEFAULT_EDGE_DEGREE,
    ):
        self.mesh = mesh
        self.layout = layout
        self.law = law
        self.tri_rule = triangle_quadrature(tri_degree)
        self.edge_rule = edge_quadrature(edge_degree)
        self._precompute()

    # -- geometric tables -------------------------------------------------

    def _precompute(self):
        mesh, layout = self.mesh, self.layout
        nt = mesh.num_triangles
        deg = layout.degree
        self.ndof = layout.ndof_elem

        tb = self.tri_rule.points  # (nq, 3)
        tw = self.tri_rule.weights  # sums to 1/2
        self.nq = len(tw)
        self.V, _ = basis_eval_many(deg, tb)  # (nq, ndof)
        dp = barycentric_partials(deg, tb)  # (nq, ndof, 3)

        grad_lam = mesh.inward_normals / (2.0 * mesh.areas)[:, None, None]
        self.grad_lambda = grad_lam  # (nt, 3, 2)
        self.G = np.einsum("qdi,tix->tqdx", dp, grad_lam)  # (nt, nq, ndof, 2)
        self.Wq = 2.0 * mesh.areas[:, None] * tw[None, :]  # (nt, nq)
        tri_xy = mesh.vertices[mesh.triangles]
        self.XY = np.einsum("qi,tix->tqx", tb, tri_xy)  # (nt, nq, 2)

        et = self.edge_rule.points  # (nqe,) params on [0, 1]
        ew = self.edge_rule.weights  # sums to 1
        self.nqe = len(et)
        if not np.allclose(et, 1.0 - et[::-1], atol=1e-14):
            raise SchemeError("edge rule must be symmetric for trace matching")
        fb = np.zeros((3, self.nqe, 3))
        for f in range(3):
            fb[f, :, f] = 1.0 - et
            fb[f, :, (f + 1) % 3] = et
        self.FV = np.stack(
            [basis_eval_many(deg, fb[f])[0] for f in range(3)]
        )  # (3, nqe, ndof)
        fdp = np.stack([barycentric_partials(deg, fb[f]) for f in range(3)])
        self.FG = np.einsum("fqdi,tix->tfqdx", fdp, grad_lam)  # (nt,3,nqe,ndof,2)
        self.FXY = np.einsum("fqi,tix->tfqx", fb, tri_xy)  # (nt, 3, nqe, 2)

        self.face_len = mesh.edge_lengths_local  # (nt, 3)
        # outward unit normal of local face f = -inward normal of vertex (f+2)%3
        self.FN = np.empty((nt, 3, 2))
        for f in range(3):
            opp = (f + 2) % 3
            self.FN[:, f] = -mesh.inward_normals[:, opp] / self.face_len[:, f][:, None]
        self.WF = self.face_len[:, :, None] * ew[None, None, :]  # (nt, 3, nqe)

        # geometric pair tensor:  B[t,d,e] = -int(phi_e grad(phi_d)) + oint(phi_d phi_e n)
        vol = np.einsum("tq,qe,tqdx->tdex", self.Wq, self.V, self.G)
        fac = np.einsum("tfq,fqd,fqe,tfx->tdex", self.WF, self.FV, self.FV, self.FN)
        self.B = fac - vol  # (nt, ndof, ndof, 2)
        self._B_flat = np.ascontiguousarray(self.B.reshape(nt, self.ndof, 2 * self.ndof))
        # boundary moments N[t,d] = oint(phi_d n)
        self.Nmom = np.einsum("tfq,fqd,tfx->tdx", self.WF, self.FV, self.FN)

        # unique DoF pairs (upper triangle) for the dissipative-scheme bounds
        iu, ju = np.triu_indices(self.ndof, k=1)
        self._pair_i, self._pair_j = iu, ju
        self._B_ij = np.ascontiguousarray(self.B[:, iu, ju, :])  # (nt, npair, 2)
        self._B_ji = np.ascontiguousarray(self.B[:, ju, iu, :])

        # constant-jacobian laws admit precomputed streamline tables
        j0 = self.law.jacobian(np.array([0.0, 0.5, 1.0]))
        self._jac_const = bool(np.ptp(j0, axis=0).max() < 1e-14)
        if self._jac_const:
            a = j0[0]
            self._adv_phi = np.einsum("x,tqdx->tqd", a, self.G)  # (nt, nq, ndof)
            kbar = np.einsum("x,tq,tqdx->td", a, self.Wq, self.G)
            denom = mesh.diameters * np.abs(kbar).sum(axis=1)
            tau = np.zeros_like(denom)
            ok = denom > 1e-300
            tau[ok] = mesh.areas[ok] / denom[ok]
            self._stream_coef = mesh.diameters * tau  # (nt,)

        # interior edge pairing (left/right elements with matched trace points)
        ie = mesh.interior_edges
        self.ie_left = mesh.edge_elements[ie, 0]
        self.ie_right = mesh.edge_elements[ie, 1]
        self.ie_fleft = mesh.edge_local_face[ie, 0]
        self.ie_fright = mesh.edge_local_face[ie, 1]
        self.ie_len = self.face_len[self.ie_left, self.ie_fleft]
        self.ie_ids = ie

        be = mesh.boundary_faces
        self.bf_elem = mesh.edge_elements[be, 0]
        self.bf_face = mesh.edge_local_face[be, 0]
        self.bf_marker = mesh.edge_markers[be]
        self.bf_ids = be

    # -- state evaluations --------------------------------------------------

    def element_values(self, u):
        return self.layout.element_values(u)

    def u_at_quad(self, ue):
        return np.einsum("qd,td->tq", self.V, ue)

    def grad_u_at_quad(self, ue):
        return np.einsum("td,tqdx->tqx", ue, self.G)

    def trace_values(self, ue):
        """u on each local face at the edge quadrature points, (nt, 3, nqe)."""
        return np.einsum("fqd,td->tfq", self.FV, ue)

    def trace_grads(self, ue):
        return np.einsum("td,tfqdx->tfqx", ue, self.FG)

    def neighbor_trace(self, traces):
        """For each interior edge: (left trace, right trace) at matched points."""
        tl = traces[self.ie_left, self.ie_fleft]
        tr = traces[self.ie_right, self.ie_fright][:, ::-1]
        return tl, tr

    # -- totals ---------------------------------------------------------------

    def total_pointwise(self, ue):
        """oint f(u^h).n per element (the conserved quantity of the quadrature
        schemes)."""
        uf = self.trace_values(ue)
        ff = self.law.flux(uf)
        return np.einsum("tfq,tfqx,tfx->t", self.WF, ff, self.FN)

    def total_interpolated(self, ue):
        """oint f^h.n with f^h the nodal interpolant of f(u)."""
        fe = self.law.flux(ue)  # (nt, ndof, 2)
        ftrace = np.einsum("fqd,tdx->tfqx", self.FV, fe)
        return np.einsum("tfq,tfqx,tfx->t", self.WF, ftrace, self.FN)

    def total_quasilinear(self, ue):
        """|K| roe_average . grad(u^h) for degree-1 data."""
        self._require_degree1("quasi-linear total")
        lam = self.law.roe_average(ue)
        k = 0.5 * np.einsum("tx,tdx->td", lam, self.mesh.inward_normals)
        return np.einsum("td,td->t", k, ue)

    def total_dg_flux(self, u):
        """Per-element boundary integral of the interface flux (dg layout)."""
        ue = self.element_values(u)
        uf = self.trace_values(ue)
        total = np.einsum(
            "tfq,tfqx,tfx->t", self.WF, self.law.flux(uf), self.FN
        )  # starts from own-trace integrals, then correct interior faces
        tl, tr = self.neighbor_trace(uf)
        nL = self.FN[self.ie_left, self.ie_fleft]
        w = self.WF[self.ie_left, self.ie_fleft]
        fhat = rusanov_interface_flux(self.law, tl, tr, nL[:, None, :])
        own_L = self.law.flux_normal(tl, nL[:, None, :])
        own_R = self.law.flux_normal(tr, nL[:, None, :])
        np.add.at(total, self.ie_left, np.einsum("eq,eq->e", w, fhat - own_L))
        np.add.at(total, self.ie_right, np.einsum("eq,eq->e", w, -(fhat - own_R)))
        return total

    # -- residual kernels ------------------------------------------------------

    def galerkin(self, ue):
        """Continuous Galerkin residuals -int(grad(phi).f) + oint(phi f.n)."""
        fq = self.law.flux(self.u_at_quad(ue))
        vol = np.einsum("tq,tqdx,tqx->td", self.Wq, self.G, fq)
        ff = self.law.flux(self.trace_values(ue))
        fac = np.einsum("tfq,fqd,tfqx,tfx->td", self.WF, self.FV, ff, self.FN)
        return fac - vol

    def _streamline(self, ue, theta_k):
        """Streamline term theta_k h_K int (jac.grad phi) tau (jac.grad u).

        tau_K = |K| / (h_K sum_sigma |k_sigma|) with k_sigma the averaged
        upwind parameters: the classic element scaling tau ~ h/|jac|, with
        the extra 1/h_K compensating the explicit h_K prefactor of the term.
        """
        if self._jac_const:
            adv_u = np.einsum("td,tqd->tq", ue, self._adv_phi)
            return theta_k * self._stream_coef[:, None] * np.einsum(
                "tq,tqd,tq->td", self.Wq, self._adv_phi, adv_u
            )
        uq = self.u_at_quad(ue)
        jq = self.law.jacobian(uq)  # (nt, nq, 2)
        gu = self.grad_u_at_quad(ue)
        adv_u = np.einsum("tqx,tqx->tq", jq, gu)
        adv_phi = np.einsum("tqx,tqdx->tqd", jq, self.G)
        jbar = self.law.jacobian(ue.mean(axis=1))  # (nt, 2)
        kbar = np.einsum("tx,tq,tqdx->td", jbar, self.Wq, self.G)
        hk = self.mesh.diameters
        denom = hk * np.abs(kbar).sum(axis=1)
        tau = np.zeros_like(denom)
        ok = denom > 1e-300
        tau[ok] = self.mesh.areas[ok] / denom[ok]
        return theta_k * hk[:, None] * tau[:, None] * np.einsum(
            "tq,tqd,tq->td", self.Wq, adv_phi, adv_u
        )

    def supg(self, ue, cfg: SchemeConfig):
        return self.galerkin(ue) + self._streamline(ue, 1.0)

    def _jump_terms(self, ue, coef_of_edge):
        """Gradient-jump penalties scattered per element.

        For each interior edge e and each element K on it, every local DoF d
        of K receives  coef(e) * oint_e [grad u] . grad(phi_d)|_K  with the
        jump oriented out of K.  Assembled over both sides this reproduces
        coef(e) * oint_e [grad u].[grad phi_sigma] per global DoF, and the
        per-element rows sum to zero because the local test gradients do.
        """
        self._require_continuous("jump stabilization")
        res = np.zeros((self.mesh.num_triangles, self.ndof))
        if len(self.ie_left) == 0:
            return res
        traces_g = self.trace_grads(ue)
        gl = traces_g[self.ie_left, self.ie_fleft]
        gr = traces_g[self.ie_right, self.ie_fright][:, ::-1]
        jump = gl - gr  # (ne, nqe, 2), left-oriented
        w = self.WF[self.ie_left, self.ie_fleft]  # (ne, nqe)
        coef = coef_of_edge(self.ie_len)  # (ne,)
        tgl = self.FG[self.ie_left, self.ie_fleft]  # (ne, nqe, ndof, 2)
        tgr = self.FG[self.ie_right, self.ie_fright][:, ::-1]
        contrib_l = coef[:, None] * np.einsum("eq,eqx,eqdx->ed", w, jump, tgl)
        contrib_r = coef[:, None] * np.einsum("eq,eqx,eqdx->ed", w, -jump, tgr)
        np.add.at(res, self.ie_left, contrib_l)
        np.add.at(res, self.ie_right, contrib_r)
        return res

    def jumpstab(self, ue, cfg: SchemeConfig):
        coef = lambda h: 0.5 * cfg.theta_e * h**2
        return self.galerkin(ue) + self._jump_terms(ue, coef)

    def dg(self, u):
        """Discontinuous Galerkin residuals with the dissipative two-point
        interface flux; own trace is used on domain-boundary faces."""
        self._require_discontinuous("dg residual")
        ue = self.element_values(u)
        fq = self.law.flux(self.u_at_quad(ue))
        vol = np.einsum("tq,tqdx,tqx->td", self.Wq, self.G, fq)
        uf = self.trace_values(ue)
        ff = self.law.flux(uf)
        fac = np.einsum("tfq,fqd,tfqx,tfx->td", self.WF, self.FV, ff, self.FN)
        res = fac - vol
        if len(self.ie_left) == 0:
            return res
        tl, tr = self.neighbor_trace(uf)
        nL = self.FN[self.ie_left, self.ie_fleft]
        w = self.WF[self.ie_left, self.ie_fleft]
        fhat = rusanov_interface_flux(self.law, tl, tr, nL[:, None, :])
        own_L = self.law.flux_normal(tl, nL[:, None, :])
        own_R = self.law.flux_normal(tr, nL[:, None, :])
        phi_l = self.FV[self.ie_fleft]  # (ne, nqe, ndof)
        phi_r = self.FV[self.ie_fright][:, ::-1]
        dl = np.einsum("eq,eqd,eq->ed", w, phi_l, fhat - own_L)
        dr = np.einsum("eq,eqd,eq->ed", w, phi_r, -(fhat - own_R))
        np.add.at(res, self.ie_left, dl)
        np.add.at(res, self.ie_right, dr)
        return res

    def rusanov(self, ue, cfg: SchemeConfig = SchemeConfig("rusanov")):
        """Dissipative central residuals on the interpolated flux.

        Returns (residuals, alpha used, c matrix) where the pairwise
        coefficients satisfy res[d] = sum_e c[d,e] (u_d - u_e) exactly and
        are nonnegative at the returned alpha.
        """
        self._require_continuous_data()
        return self._rusanov_parts(ue, cfg.alpha, want="c")

    def _rusanov_pairs(self, ue):
        """Divided-difference couplings on the unique DoF pairs: returns
        (flux values fe, Db_ij, Db_ji) with Db_pq = D_pq . B[p,q]."""
        fe = self.law.flux(ue)  # (nt, ndof, 2)
        i, j = self._pair_i, self._pair_j
        du = ue[:, i] - ue[:, j]
        df = fe[:, i, :] - fe[:, j, :]
        tiny = 1e-14 * (1.0 + np.abs(ue).max(initial=0.0))
        mask = np.abs(du) > tiny
        D = df / np.where(mask, du, 1.0)[..., None]
        if not mask.all():
            D = np.where(mask[..., None], D, self.law.jacobian(ue[:, i]))
        db_ij = np.einsum("tpx,tpx->tp", D, self._B_ij)
        db_ji = np.einsum("tpx,tpx->tp", D, self._B_ji)
        return fe, db_ij, db_ji

    def _rusanov_parts(self, ue, alpha_user, want="res"):
        """Dissipative central residuals; ``want`` selects the extra output:
        'res' -> (res, alpha, None), 'c' -> full pair matrix,
        'csum' -> per-DoF row sums of c."""
        fe, db_ij, db_ji = self._rusanov_pairs(ue)
        gal_h = np.matmul(
            self._B_flat, fe.reshape(-1, 2 * self.ndof, 1)
        ).reshape(ue.shape)
        mx = np.maximum(np.abs(db_ij), np.abs(db_ji)).max(axis=1)
        bound = self.ndof * mx
        if alpha_user is None:
            alpha = 1.01 * bound
        else:
            alpha = np.maximum(bound, alpha_user)  # user value floored at the bound
        ubar = ue.mean(axis=1)
        res = gal_h + alpha[:, None] * (ue - ubar[:, None])
        i, j = self._pair_i, self._pair_j
        if want == "c":
            c = np.zeros((len(ue), self.ndof, self.ndof))
            c[:, i, j] = -db_ij + alpha[:, None] / self.ndof
            c[:, j, i] = -db_ji + alpha[:, None] / self.ndof
            return res, alpha, c
        if want == "csum":
            csum = np.full_like(ue, 0.0)
            a_n = alpha / self.ndof
            for p in range(len(i)):
                csum[:, i[p]] += a_n - db_ij[:, p]
                csum[:, j[p]] += a_n - db_ji[:, p]
            return res, alpha, csum
        return res, alpha, None

    def nscheme(self, ue):
        """Upwind residuals k+ (u - utilde) from the averaged jacobian."""
        self._require_degree1("the upwind distribution scheme")
        self._require_continuous_data()
        if self.law.roe_average is None:
            raise SchemeError(f"law {self.law.name!r} provides no averaged jacobian")
        lam = self.law.roe_average(ue)  # (nt, 2)
        k = 0.5 * np.einsum("tx,tdx->td", lam, self.mesh.inward_normals)
        kp = np.maximum(k, 0.0)
        km = np.minimum(k, 0.0)
        skm = km.sum(axis=1)
        scale = np.abs(k).sum(axis=1)
        degenerate = skm >= -1e-15 * (1.0 + scale)
        bad = degenerate & (scale > 1e-13 * (1.0 + np.abs(lam).max()))
        if np.any(bad):
            raise SchemeError(
                f"degenerate upwind state in elements {np.nonzero(bad)[0][:5]}"
            )
        denom = np.where(degenerate, 1.0, skm)
        utilde = np.einsum("td,td->t", km, ue) / denom
        res = kp * (ue - utilde[:, None])
        res[degenerate] = 0.0
        return res

    def nscheme_cmatrix(self, ue):
        lam = self.law.roe_average(ue)
        k = 0.5 * np.einsum("tx,tdx->td", lam, self.mesh.inward_normals)
        kp = np.maximum(k, 0.0)
        km = np.minimum(k, 0.0)
        skm = km.sum(axis=1)
        denom = np.where(skm < 0.0, skm, -1.0)
        c = np.einsum("td,te->tde", kp, km) / denom[:, None, None]
        c[skm >= 0.0] = 0.0
        return c

    def fv_median_dual(self, ue, interface_flux=None):
        """Median-dual finite-volume residuals phrased per element.

        Each vertex DoF collects fhat(u_d, u_e) - f(u_d).m over the two
        median-dual interfaces of the element; summed over the element this
        telescopes to the boundary integral of the interpolated flux.
        """
        self._require_degree1("the median-dual finite-volume scheme")
        self._require_continuous_data()
        if interface_flux is None:
            interface_flux = rusanov_interface_flux
        m = self.median_dual_normals()  # (nt, 3, 2) for pairs (0,1),(1,2),(2,0)
        pairs = [(0, 1), (1, 2), (2, 0)]
        res = np.zeros_like(ue)
        for j, (a, b) in enumerate(pairs):
            mj = m[:, j]
            fab = interface_flux(self.law, ue[:, a], ue[:, b], mj)
            fba = interface_flux(self.law, ue[:, b], ue[:, a], -mj)
            res[:, a] += fab - self.law.flux_normal(ue[:, a], mj)
            res[:, b] += fba - self.law.flux_normal(ue[:, b], -mj)
        return res

    def median_dual_normals(self):
        """Scaled normals of the midpoint-to-centroid interfaces, oriented
        from the first to the second vertex of the pairs (0,1), (1,2), (2,0)."""
        n = self.mesh.inward_normals
        # interface between vertices a and b: (n_b - n_a) / 6
        return np.stack(
            [(n[:, 1] - n[:, 0]) / 6.0, (n[:, 2] - n[:, 1]) / 6.0, (n[:, 0] - n[:, 2]) / 6.0],
            axis=1,
        )

    def low_order(self, ue, cfg: SchemeConfig):
        """Monotone residuals + their conserved totals for the limiter."""
        kind = cfg.resolved_low_order(self.layout.degree)
        if kind == "nscheme":
            low = self.nscheme(ue)
        elif kind == "rusanov":
            low, _, _ = self._rusanov_parts(ue, cfg.alpha)
        else:
            raise SchemeError(f"unknown low-order provider {kind!r}")
        return low, low.sum(axis=1)

    def limiter_floor(self, ue):
        """Total-residual magnitude below which the distribution weights are
        bypassed (the split is ill-conditioned and zero keeps conservation)."""
        fmax = np.abs(self.law.flux(ue)).max(axis=(1, 2))
        return 1e-14 * (1.0 + fmax * self.mesh.diameters)

    def limited(self, ue, cfg: SchemeConfig):
        low, total = self.low_order(ue, cfg)
        floor = self.limiter_floor(ue)
        active = np.abs(total) > floor
        x = np.zeros_like(low)
        x[active] = low[active] / total[active, None]
        xp = np.maximum(x, 0.0)
        sump = xp.sum(axis=1)
        beta = np.zeros_like(low)
        beta[active] = xp[active] / sump[active, None]
        res = beta * total[:, None]
        if cfg.scheme == "limited-supg":
            res = res + self._streamline(ue, cfg.theta_k)
        elif cfg.scheme == "limited-jump":
            res = res + self._jump_terms(ue, lambda h: cfg.theta_e * h**2)
        return res, total

    # -- boundary ---------------------------------------------------------

    def boundary_residuals(self, u, bc) -> tuple[np.ndarray, np.ndarray]:
        """Weak upwind boundary residuals, (nbf, ndof) plus face totals."""
        ue = self.element_values(u)
        el, fl = self.bf_elem, self.bf_face
        uf = self.trace_values(ue)[el, fl]  # (nbf, nqe)
        xy = self.FXY[el, fl]  # (nbf, nqe, 2)
        ub = bc(xy[..., 0], xy[..., 1])
        n = self.FN[el, fl]  # (nbf, 2)
        nq = np.broadcast_to(n[:, None, :], uf.shape + (2,))
        F = outward_boundary_flux(self.law, uf, ub, nq)
        integrand = F - self.law.flux_normal(uf, nq)
        w = self.WF[el, fl]
        phi = self.FV[fl]  # (nbf, nqe, ndof)
        res = np.einsum("bq,bqd,bq->bd", w, phi, integrand)
        totals = np.einsum("bq,bq->b", w, integrand)
        return res, totals

    # -- dispatch -----------------------------------------------------------

    def element_residuals(self, scheme: str, u, cfg: Optional[SchemeConfig] = None):
        """Evaluate one scheme on all elements; returns (nt, ndof)."""
        cfg = cfg or SchemeConfig(scheme if scheme in SCHEMES else "nscheme")
        ue = self.element_values(u) if scheme != "dg" else None
        if scheme == "galerkin":
            return self.galerkin(ue)
        if scheme == "supg":
            return self.supg(ue, cfg)
        if scheme == "jump":
            return self.jumpstab(ue, cfg)
        if scheme == "dg":
            return self.dg(u)
        if scheme == "rusanov":
            return self.rusanov(ue, cfg)[0]
        if scheme == "nscheme":
            return self.nscheme(ue)
        if scheme == "fv":
            return self.fv_median_dual(ue)
        if scheme in ("limited", "limited-supg", "limited-jump"):
            return self.limited(ue, cfg)[0]
        raise SchemeError(f"unknown scheme {scheme!r}")

    def conserved_totals(self, scheme: str, u, cfg: Optional[SchemeConfig] = None):
        """The flux integral each element's residuals must sum to."""
        cfg = cfg or SchemeConfig(scheme if scheme in SCHEMES else "nscheme")
        if scheme in ("galerkin", "supg", "jump"):
            return self.total_pointwise(self.element_values(u))
        if scheme == "dg":
            return self.total_dg_flux(u)
        if scheme in ("rusanov", "fv"):
            return self.total_interpolated(self.element_values(u))
        if scheme == "nscheme":
            return self.total_quasilinear(self.element_values(u))
        if scheme in ("limited", "limited-supg", "limited-jump"):
            kind = cfg.resolved_low_order(self.layout.degree)
            if kind == "nscheme":
                return self.total_quasilinear(self.element_values(u))
            return self.total_interpolated(self.element_values(u))
        raise SchemeError(f"unknown scheme {scheme!r}")

    def residual_set(self, scheme: str, u, bc, cfg: Optional[SchemeConfig] = None):
        res = self.element_residuals(scheme, u, cfg)
        bres, btot = self.boundary_residuals(u, bc)
        return ResidualSet(
            scheme=scheme,
            element=res,
            boundary=bres,
            element_totals=self.conserved_totals(scheme, u, cfg),
            boundary_totals=btot,
        )

    def assemble(self, scheme: str, u, bc, cfg: Optional[SchemeConfig] = None):
        """Nodal residual vector of the full scheme (elements + boundary)."""
        res = self.element_residuals(scheme, u, cfg)
        out = np.zeros(self.layout.num_dofs)
        np.add.at(out, self.layout.element_dofs, res)
        bres, _ = self.boundary_residuals(u, bc)
        np.add.at(out, self.layout.element_dofs[self.bf_elem], bres)
        return out

    # -- step-size coefficient bounds --------------------------------------

    def monotone_coefficient_sums(self, u, cfg: SchemeConfig):
        """Per-DoF upper bound on the monotone coupling coefficients, used to
        pick pseudo-time steps.  Uses the low-order scheme's c matrix plus a
        bound on the boundary coupling."""
        ue = self.element_values(u)
        kind = cfg.resolved_low_order(self.layout.degree)
        if cfg.scheme == "nscheme" or (
            cfg.scheme in ("limited", "limited-supg", "limited-jump")
            and kind == "nscheme"
        ):
            csum_elem = self.nscheme_cmatrix(ue).sum(axis=2)
        else:
            _, _, csum_elem = self._rusanov_parts(ue, cfg.alpha, want="csum")
        out = np.zeros(self.layout.num_dofs)
        np.add.at(out, self.layout.element_dofs, csum_elem)
        # boundary coupling bound: oint phi |jac.n|
        el, fl = self.bf_elem, self.bf_face
        uf = self.trace_values(ue)[el, fl]
        n = self.FN[el, fl]
        speed = np.abs(
            np.einsum("bqx,bx->bq", self.law.jacobian(uf), n)
        )
        w = self.WF[el, fl]
        bsum = np.einsum("bq,bqd,bq->bd", w, self.FV[fl], speed)
        np.add.at(out, self.layout.element_dofs[el], bsum)
        return out

    # -- guards ------------------------------------------------------------

    def _require_degree1(self, what):
        if self.layout.degree != 1:
            raise SchemeError(f"{what} requires degree-1 elements")

    def _require_continuous(self, what):
        if not self.layout.continuous:
            raise SchemeError(f"{what} requires a continuous layout")

    def _require_continuous_data(self):
        # rusanov/nscheme/fv operate on per-element nodal data; both layouts
        # provide that, nothing to check beyond degree elsewhere
        return

    def _require_discontinuous(self, what):
        if self.layout.continuous:
            raise SchemeError(f"{what} requires a discontinuous layout")
