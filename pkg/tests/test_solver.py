import numpy as np
import pytest

from rdflux.discretization import SchemeConfig, SchemeError
from rdflux.mesh import generate_structured_mesh
from rdflux.problems import BoundaryData, Problem, advection_law, builtin_problems, square_entropy
from rdflux.solver import (
    RunContext,
    compute_omega,
    convergence_study,
    default_omega_cap,
    solve_steady,
    truncation_study,
)

PROBS = builtin_problems()


def constant_problem(value=0.7):
    law = advection_law(1.0, 2.0)
    f = lambda x, y: np.full_like(np.asarray(x, dtype=float), value)
    return Problem(
        name="const",
        law=law,
        bc=BoundaryData(f),
        entropy=square_entropy(law),
        exact=f,
        characteristic_guess=True,
    )


def test_compute_omega_values():
    om = compute_omega(np.array([2.0, 3.0]))
    assert np.allclose(om, [0.45, 0.3], atol=1e-15)
    om = compute_omega(np.array([2.0, 0.0]), cap=0.123)
    assert om[1] == 0.123
    with pytest.raises(SchemeError):
        compute_omega(np.array([0.0]))


def test_omega_cap_scale():
    m = generate_structured_mesh(4, 4)
    law = advection_law(1.0, 2.0)
    cap = default_omega_cap(m, law, np.zeros(4))
    assert abs(cap - 0.9 * m.diameters.min() / np.sqrt(5.0)) <= 1e-15


def test_omega_halves_with_h():
    p = PROBS["advection"]
    meds = []
    for n in (8, 16):
        ctx = RunContext(generate_structured_mesh(n, n), p, "nscheme", 1)
        u = ctx.initial_guess("mean")
        om = compute_omega(ctx.coefficient_sums(u))
        meds.append(np.median(om))
    ratio = meds[0] / meds[1]
    assert 1.7 <= ratio <= 2.3


def test_constant_compatible_converges_immediately():
    p = constant_problem()
    ctx = RunContext(generate_structured_mesh(4, 4), p, "rusanov", 1)
    u, rep = solve_steady(ctx, tol=1e-10)
    assert rep.converged and rep.iterations <= 2
    assert np.abs(u - 0.7).max() <= 1e-13


def test_unknown_scheme_rejected():
    with pytest.raises(SchemeError):
        RunContext(generate_structured_mesh(2, 2), PROBS["advection"], "magic", 1)


def test_divergence_reported():
    from rdflux.solver import DivergenceError

    p = PROBS["advection"]
    ctx = RunContext(generate_structured_mesh(4, 4), p, "nscheme", 1)

    class BadCtx:
        layout = ctx.layout
        mesh = ctx.mesh
        problem = ctx.problem

        def residual(self, u):
            return np.full(ctx.layout.num_dofs, np.nan)

        def coefficient_sums(self, u):
            return np.ones(ctx.layout.num_dofs)

        def initial_guess(self, kind):
            return np.zeros(ctx.layout.num_dofs)

    with pytest.raises(DivergenceError):
        solve_steady(BadCtx(), tol=1e-10, max_iter=10)


def test_monotone_iterates_stay_bounded():
    p = PROBS["advection-step"]
    ctx = RunContext(generate_structured_mesh(12, 12), p, "rusanov", 1)
    seen = []

    def monitor(it, u, rel):
        seen.append((u.min(), u.max()))

    solve_steady(ctx, tol=0.0, max_iter=300, monitor=monitor)
    lo = min(s[0] for s in seen)
    hi = max(s[1] for s in seen)
    assert lo >= 0.0 - 1e-13
    assert hi <= 1.0 + 1e-13


def test_limited_converges_32x32():
    """Bounded-distribution scheme reaches tol 1e-10 well within the
    iteration budget on the smooth problem."""
    p = PROBS["advection"]
    ctx = RunContext(generate_structured_mesh(32, 32), p, "limited-supg", 1)
    u, rep = solve_steady(ctx, tol=1e-10, max_iter=100000, init="mean")
    assert rep.converged
    assert rep.iterations < 100000
    assert ctx.l2_error(u) < 0.01


def test_truncation_study_errors():
    p = PROBS["advection"]
    with pytest.raises(SchemeError):
        truncation_study(p, "galerkin", 1, levels=(8, 16))
    with pytest.raises(SchemeError):
        convergence_study(p, "nscheme", 1, levels=(8,))


def test_truncation_study_smoke():
    p = PROBS["advection"]
    st = truncation_study(p, "galerkin", 1, levels=(4, 8, 16))
    assert len(st["h"]) == 3
    assert st["element_slope"] > 2.0


def test_convergence_study_smoke():
    p = PROBS["advection"]
    st = convergence_study(p, "nscheme", 1, levels=(4, 8), tol=1e-8, init="mean")
    assert len(st["orders"]) == 1
    assert st["l2_error"][1] < st["l2_error"][0]


def test_fixed_point_residual_small_at_convergence():
    p = PROBS["advection"]
    ctx = RunContext(generate_structured_mesh(8, 8), p, "nscheme", 1)
    u, rep = solve_steady(ctx, tol=1e-10, init="mean")
    assert rep.converged
    r = ctx.residual(u)
    assert np.abs(r).max() <= 1e-10 * rep.initial_norm * 1.000001


def test_converged_solution_global_conservation():
    """At the fixed point the global residual sums telescope to a boundary
    flux balance of the same size as the tolerance."""
    p = PROBS["advection"]
    ctx = RunContext(generate_structured_mesh(8, 8), p, "nscheme", 1)
    u, rep = solve_steady(ctx, tol=1e-12, init="mean")
    r = ctx.residual(u)
    perimeter = 4.0
    assert abs(r.sum()) <= rep.initial_norm * 1e-12 * ctx.layout.num_dofs * perimeter
