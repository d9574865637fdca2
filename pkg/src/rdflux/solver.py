"""Pseudo-time fixed-point iteration to the steady state, plus truncation
and solution-error order studies.

The update is u <- u - omega * R(u) with per-DoF steps omega = nu / csum,
where csum bounds the monotone coupling coefficients of the (low-order)
scheme at each DoF; this keeps the monotone schemes inside their stencil
bounds at every iteration.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import DoFLayout
from .dgrds import DgRds
from .discretization import Discretization, SchemeConfig, SchemeError
from .mesh import Mesh, generate_structured_mesh
from .problems import Problem

RUN_SCHEMES = (
    "galerkin",
    "supg",
    "jump",
    "dg",
    "rusanov",
    "nscheme",
    "limited-supg",
    "limited-jump",
    "dgrds-o1",
    "dgrds-o2",
)


class DivergenceError(RuntimeError):
    pass


@dataclass
class SolveReport:
    iterations: int = 0
    converged: bool = False
    plateaued: bool = False
    final_norm: float = np.inf
    initial_norm: float = np.inf
    wall_time: float = 0.0
    history: list = field(default_factory=list)

    @property
    def final_relative(self):
        if self.initial_norm <= 0.0:
            return 0.0
        return self.final_norm / self.initial_norm


def compute_omega(c_sums, nu: float = 0.9, cap: Optional[float] = None) -> np.ndarray:
    """Per-DoF pseudo-time steps nu / csum; DoFs with no coupling fall back
    to ``cap`` (required if any occur)."""
    c = np.asarray(c_sums, dtype=float)
    omega = np.empty_like(c)
    ok = c > 1e-300
    omega[ok] = nu / c[ok]
    if np.any(~ok):
        if cap is None:
            raise SchemeError("zero coupling encountered and no omega cap given")
        omega[~ok] = cap
    return omega


def default_omega_cap(mesh: Mesh, law, u, nu: float = 0.9) -> float:
    """Fallback step nu * h / max|jacobian| for decoupled DoFs."""
    jmax = float(np.linalg.norm(law.jacobian(np.asarray(u, dtype=float)), axis=-1).max())
    h = float(mesh.diameters.min())
    return nu * h / max(jmax, 1e-300)


class RunContext:
    """Mesh + layout + scheme closures used by the iteration and the CLI."""

    def __init__(self, mesh: Mesh, problem: Problem, scheme: str, degree: int = 1,
                 cfg: Optional[SchemeConfig] = None, **quad):
        if scheme not in RUN_SCHEMES and scheme not in ("limited", "fv"):
            raise SchemeError(f"unknown scheme {scheme!r}; choose from {RUN_SCHEMES}")
        self.mesh = mesh
        self.problem = problem
        self.scheme = scheme
        self.degree = degree
        self.is_split = scheme.startswith("dgrds")
        if self.is_split:
            if degree != 1:
                raise SchemeError("the split-total schemes are degree-1 only")
            self.dg = DgRds(mesh, problem.law, **quad)
            self.disc = self.dg.disc
            self.layout = self.dg.layout
            self.cfg = cfg or SchemeConfig("rusanov")
            self.limited = scheme.endswith("o2")
        else:
            continuous = scheme != "dg"
            self.layout = DoFLayout(mesh, degree, continuous=continuous)
            self.disc = Discretization(mesh, self.layout, problem.law, **quad)
            self.cfg = cfg or SchemeConfig(scheme)
            self.dg = None
            self.limited = False

    def residual(self, u) -> np.ndarray:
        if self.is_split:
            return self.dg.assemble(u, self.problem.bc, limited=self.limited)
        return self.disc.assemble(self.scheme, u, self.problem.bc, self.cfg)

    def coefficient_sums(self, u) -> np.ndarray:
        if self.is_split:
            return self.dg.coefficient_sums(u)
        return self.disc.monotone_coefficient_sums(u, self.cfg)

    def initial_guess(self, kind: str = "characteristic") -> np.ndarray:
        coords = self.layout.dof_coords
        if kind == "characteristic" and self.problem.characteristic_guess:
            return np.asarray(
                self.problem.exact(coords[:, 0], coords[:, 1]), dtype=float
            )
        if kind == "exact" and self.problem.exact is not None:
            return np.asarray(
                self.problem.exact(coords[:, 0], coords[:, 1]), dtype=float
            )
        # mean of the boundary data over the boundary quadrature points
        d = self.disc
        xy = d.FXY[d.bf_elem, d.bf_face]
        ub = self.problem.bc(xy[..., 0], xy[..., 1])
        return np.full(self.layout.num_dofs, float(np.mean(ub)))

    def l2_error(self, u) -> float:
        if self.problem.exact is None:
            raise SchemeError(f"problem {self.problem.name!r} has no exact solution")
        d = self.disc
        uq = d.u_at_quad(d.element_values(u))
        ex = self.problem.exact(d.XY[..., 0], d.XY[..., 1])
        return float(np.sqrt(np.einsum("tq,tq->", d.Wq, (uq - ex) ** 2)))


def solve_steady(
    ctx: RunContext,
    tol: float = 1e-10,
    max_iter: int = 200000,
    nu: float = 0.9,
    init="characteristic",
    omega_refresh: int = 10,
    plateau_window: int = 5000,
    monitor=None,
):
    """Iterate to the steady state; returns (u, SolveReport).

    Convergence is measured as max |assembled nodal residual| relative to its
    initial value.  If that measure stops improving for ``plateau_window``
    iterations above tol, the run stops and reports non-convergence with the
    plateau value (limited schemes can cycle near the fixed point).
    """
    t0 = time.perf_counter()
    u = ctx.initial_guess(init) if isinstance(init, str) else np.array(init, dtype=float)
    report = SolveReport()
    cap = default_omega_cap(ctx.mesh, ctx.problem.law, u, nu)
    omega = None
    best = np.inf
    best_iter = 0
    best_u = u
    # non-monotone schemes may need smaller steps than the monotone-scheme
    # coefficient bound allows; halve deterministically on sustained growth
    scale = 1.0
    recoveries = 0
    it = 0
    while True:
        r = ctx.residual(u)
        norm = float(np.abs(r).max())
        grown = it > 0 and norm > 1e8 * (1.0 + report.initial_norm)
        if not np.isfinite(norm) or grown:
            if recoveries < 60 and scale > 1e-7 and it > 0:
                recoveries += 1
                scale *= 0.5
                u = best_u
                omega = None
                continue
            raise DivergenceError(f"non-finite residual at iteration {it}")
        report.history.append(norm)
        if it == 0:
            report.initial_norm = norm
        rel = norm / report.initial_norm if report.initial_norm > 0 else 0.0
        if monitor is not None:
            monitor(it, u, rel)
        if rel <= tol or norm == 0.0:
            report.converged = True
            break
        if rel < best * 0.999999:
            best, best_iter = rel, it
            best_u = u
        elif rel > 4.0 * best and recoveries < 60 and scale > 1e-7:
            recoveries += 1
            scale *= 0.5
            u = best_u
            omega = None
            best_iter = it
            continue
        elif it - best_iter >= plateau_window:
            report.plateaued = True
            break
        if it == max_iter:
            break
        if omega is None or it % omega_refresh == 0:
            omega = scale * compute_omega(ctx.coefficient_sums(u), nu=nu, cap=cap)
        u = u - omega * r
        it += 1
    report.iterations = it
    report.final_norm = norm
    report.wall_time = time.perf_counter() - t0
    return u, report


# -- order studies -----------------------------------------------------------


def _fit_slope(hs, values):
    hs = np.asarray(hs, dtype=float)
    values = np.maximum(np.asarray(values, dtype=float), 1e-300)
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])


def truncation_study(
    problem: Problem,
    scheme: str,
    degree: int,
    levels=(8, 16, 32, 64),
    rect=(0.0, 0.0, 1.0, 1.0),
    cfg: Optional[SchemeConfig] = None,
    **quad,
):
    """Max element/boundary residual of the exact-solution interpolant vs h.

    Returns a dict with the measured maxima and least-squares slopes; the
    element slope approaches degree+2 for the high-order distributions and
    the boundary slope reflects the trace interpolation error.
    """
    if len(levels) < 3:
        raise SchemeError("need at least 3 mesh levels for a slope fit")
    if problem.exact is None:
        raise SchemeError("truncation study needs an exact solution")
    hs, emax, bmax = [], [], []
    for n in levels:
        mesh = generate_structured_mesh(n, n, rect)
        ctx = RunContext(mesh, problem, scheme, degree, cfg, **quad)
        u = ctx.layout.interpolate(problem.exact)
        if ctx.is_split:
            srs = ctx.dg.split_residuals(u)
            elem = srs.element if not ctx.limited else ctx.dg._limit(
                srs.element, srs.element_totals,
                ctx.disc.limiter_floor(ctx.disc.element_values(u)))
        else:
            elem = ctx.disc.element_residuals(scheme, u, ctx.cfg)
        bres, _ = ctx.disc.boundary_residuals(u, ctx.problem.bc)
        hs.append(mesh.diameters.max())
        emax.append(float(np.abs(elem).max()))
        bmax.append(float(np.abs(bres).max()))
    return {
        "h": hs,
        "element_max": emax,
        "boundary_max": bmax,
        "element_slope": _fit_slope(hs, emax),
        "boundary_slope": _fit_slope(hs, bmax),
    }


def convergence_study(
    problem: Problem,
    scheme: str,
    degree: int,
    levels=(8, 16, 32, 64),
    rect=(0.0, 0.0, 1.0, 1.0),
    cfg: Optional[SchemeConfig] = None,
    tol: float = 1e-8,
    max_iter: int = 200000,
    init="mean",
    **quad,
):
    """Discrete L2 errors of the steady solutions on a mesh family, with the
    observed orders between consecutive levels."""
    if len(levels) < 2:
        raise SchemeError("need at least 2 mesh levels")
    if problem.exact is None:
        raise SchemeError("convergence study needs an exact solution")
    hs, errs, reports = [], [], []
    for n in levels:
        mesh = generate_structured_mesh(n, n, rect)
        ctx = RunContext(mesh, problem, scheme, degree, cfg, **quad)
        u, rep = solve_steady(ctx, tol=tol, max_iter=max_iter, init=init)
        hs.append(mesh.diameters.max())
        errs.append(ctx.l2_error(u))
        reports.append(rep)
    orders = [
        float(np.log(errs[i - 1] / errs[i]) / np.log(hs[i - 1] / hs[i]))
        for i in range(1, len(errs))
    ]
    return {"h": hs, "l2_error": errs, "orders": orders, "reports": reports}
