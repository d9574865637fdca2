import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdflux.basis import DoFLayout
from rdflux.discretization import Discretization
from rdflux.problems import (
    advection_law,
    builtin_problems,
    burgers_law,
    outward_boundary_flux,
    rusanov_interface_flux,
    square_entropy,
    upwind_boundary_flux,
)

from conftest import random_triangle_mesh

finite = st.floats(-3.0, 3.0, allow_nan=False)


def test_upwind_flux_printed_branch_examples():
    adv = advection_law(1.0, 2.0)
    # positive normal speed selects the exterior datum
    n = np.array([1.0, 0.0])
    assert upwind_boundary_flux(adv, 1.0, 0.0, n) == 0.0
    # consistency
    assert abs(upwind_boundary_flux(adv, 0.7, 0.7, n) - adv.flux_normal(0.7, n)) <= 1e-15
    # negative normal speed keeps the interior trace
    bg = burgers_law()
    n = np.array([0.0, -1.0])
    val = upwind_boundary_flux(bg, 2.0, 5.0, n)
    assert abs(val - (-2.0)) <= 1e-15


def test_outward_flux_orientation():
    """Through the outward normal the exterior datum is taken on inflow."""
    adv = advection_law(1.0, 2.0)
    n_out = np.array([0.0, -1.0])  # bottom boundary, wind (1,2) enters
    assert abs(outward_boundary_flux(adv, 1.0, 0.25, n_out) - (-2.0 * 0.25)) <= 1e-15
    n_out = np.array([0.0, 1.0])  # top boundary, outflow: interior trace
    assert abs(outward_boundary_flux(adv, 1.0, 0.25, n_out) - 2.0) <= 1e-15


def test_rusanov_flux_examples():
    bg = burgers_law()
    val = rusanov_interface_flux(bg, 1.0, -1.0, np.array([1.0, 0.0]))
    assert abs(val - 1.5) <= 1e-15
    any_n = np.array([0.3, -0.4])
    assert abs(rusanov_interface_flux(bg, 1.0, 1.0, any_n) - bg.flux_normal(1.0, any_n)) <= 1e-15


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite)
def test_interface_flux_properties(ul, ur, nx, ny):
    bg = burgers_law()
    n = np.array([nx, ny])
    f = rusanov_interface_flux(bg, ul, ur, n)
    g = rusanov_interface_flux(bg, ur, ul, -n)
    assert abs(f + g) <= 1e-13 * (1.0 + abs(f))
    c = rusanov_interface_flux(bg, ul, ul, n)
    assert abs(c - bg.flux_normal(ul, n)) <= 1e-13 * (1.0 + abs(c))


@settings(max_examples=100, deadline=None)
@given(finite, finite)
def test_upwind_flux_consistency(u, scale):
    adv = advection_law(1.0, 2.0)
    n = np.array([np.cos(scale), np.sin(scale)])
    assert abs(upwind_boundary_flux(adv, u, u, n) - adv.flux_normal(u, n)) <= 1e-13 * (
        1.0 + abs(u)
    )


@pytest.mark.parametrize("law", [advection_law(1.0, 2.0), burgers_law()])
def test_jacobian_finite_difference(law, rng):
    us = rng.uniform(-2.0, 2.0, 40)
    for h in (1e-4, 5e-5):
        fd = (law.flux(us + h) - law.flux(us - h)) / (2 * h)
        err = np.abs(fd - law.jacobian(us)).max()
        assert err <= 10.0 * h**2 + 1e-11


def test_roe_average_property(rng):
    """The element integral of div f(u^h) equals |K| times the averaged
    jacobian dotted with grad(u^h) for degree-1 data."""
    bg = burgers_law()
    for _ in range(25):
        m = random_triangle_mesh(rng)
        d = Discretization(m, DoFLayout(m, 1), bg)
        u = rng.uniform(-2.0, 2.0, 3)
        total_true = d.total_pointwise(u[None, :])[0]
        lam = bg.roe_average(u)
        grad_u = (u[None, :] @ (m.inward_normals[0] / (2 * m.areas[0])))[0]
        assert abs(total_true - m.areas[0] * lam @ grad_u) <= 1e-13 * (1 + abs(total_true))


@pytest.mark.parametrize("law", [advection_law(1.0, 2.0), burgers_law()])
def test_entropy_pair_compatibility(law, rng):
    """g' = v f' checked by finite differences."""
    pair = square_entropy(law)
    us = rng.uniform(-2.0, 2.0, 50)
    h = 1e-5
    gprime = (pair.g(us + h) - pair.g(us - h)) / (2 * h)
    expect = pair.v(us)[:, None] * law.jacobian(us)
    assert np.abs(gprime - expect).max() <= 1e-6


@pytest.mark.parametrize("law", [advection_law(1.0, 2.0), burgers_law()])
def test_potential_identity(law, rng):
    pair = square_entropy(law)
    us = rng.uniform(-2.0, 2.0, 50)
    theta = pair.potential(us)
    expect = pair.v(us)[:, None] * law.flux(us) - pair.g(us)
    assert np.abs(theta - expect).max() == 0.0


def test_builtin_registry_contents():
    probs = builtin_problems()
    assert {"advection", "advection-step", "burgers", "burgers-shock"} <= set(probs)
    for p in probs.values():
        assert p.entropy is not None


def test_advection_exact_characteristics(rng):
    p = builtin_problems()["advection"]
    x = rng.uniform(0, 1, 30)
    y = rng.uniform(0, 1, 30)
    # trace the characteristic back to the boundary and compare
    t = np.minimum(x / 1.0, y / 2.0)
    foot = p.exact(x - t, y - 2 * t)
    assert np.abs(p.exact(x, y) - foot).max() <= 1e-13


def test_burgers_characteristic_value():
    p = builtin_problems()["burgers"]
    assert abs(p.exact(0.25, 0.25) - 2.0) <= 1e-15


def test_burgers_entropy_values():
    p = builtin_problems()["burgers"]
    theta = p.entropy.potential(2.0)
    assert np.allclose(theta, [4.0 / 3.0, 2.0], atol=1e-14)
    assert np.allclose(p.entropy.g(2.0), [8.0 / 3.0, 2.0], atol=1e-14)


@pytest.mark.parametrize("name", ["advection", "burgers"])
def test_exact_solutions_satisfy_pde(name, rng):
    """|div f(u_exact)| small by centered finite differences at interior
    sample points away from discontinuities."""
    p = builtin_problems()[name]
    law = p.law
    h = 1e-5
    # smooth region for both problems, away from the compression focus
    x = rng.uniform(0.1, 0.9, 200)
    y = rng.uniform(0.05, 0.3, 200)
    fx = (law.flux(p.exact(x + h, y))[:, 0] - law.flux(p.exact(x - h, y))[:, 0]) / (2 * h)
    fy = (law.flux(p.exact(x, y + h))[:, 1] - law.flux(p.exact(x, y - h))[:, 1]) / (2 * h)
    assert np.abs(fx + fy).max() <= 1e-8 * (1.0 + np.abs(law.flux(p.exact(x, y))).max())
