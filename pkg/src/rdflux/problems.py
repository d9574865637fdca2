"""Conservation laws, entropy pairs, boundary data and verification problems.

All law callables are vectorized: ``flux`` and ``jacobian`` map an array of
states of shape S to an array of shape S + (2,).  Boundary data functions map
coordinate arrays ``(x, y)`` to state arrays.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class ConservationLaw:
    """Scalar conservation law div f(u) = 0 with flux f: R -> R^2."""

    name: str
    flux: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    # averaged jacobian argument over element nodal values, or None;
    # contract: integral of div f(u^h) over K equals |K| * roe_average . grad(u^h)
    # for linear (degree-1) element data
    roe_average: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def flux_normal(self, u, n):
        """f(u) . n for states u (shape S) and normals n (shape S + (2,) or (2,))."""
        f = self.flux(np.asarray(u))
        return np.einsum("...x,...x->...", f, np.broadcast_to(n, f.shape))


@dataclass(frozen=True)
class EntropyPair:
    """Convex entropy U with compatible flux g (g' = U' f') for a given law.

    ``potential(u)`` is the 2-vector v(u) f(u) - g(u) entering the interface
    dissipation checks.
    """

    U: Callable[[np.ndarray], np.ndarray]
    v: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    law: ConservationLaw

    def potential(self, u):
        u = np.asarray(u, dtype=float)
        return self.v(u)[..., None] * self.law.flux(u) - self.g(u)


@dataclass(frozen=True)
class BoundaryData:
    """Boundary trace function, optionally restricted to a set of markers."""

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    markers: Optional[tuple] = None

    def __call__(self, x, y):
        return np.asarray(self.func(np.asarray(x), np.asarray(y)), dtype=float)

    def applies_to(self, marker: int) -> bool:
        return self.markers is None or marker in self.markers


@dataclass(frozen=True)
class Problem:
    """A verification problem: law + boundary data + optional exact solution."""

    name: str
    law: ConservationLaw
    bc: BoundaryData
    entropy: EntropyPair
    exact: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    # smooth problems with a characteristic extension usable as initial guess
    characteristic_guess: bool = False


def upwind_boundary_flux(law: ConservationLaw, u, u_b, n):
    """Two-state boundary flux: f(u_b).n where jac(u).n > 0, else f(u).n.

    The switch is evaluated at the interior state ``u``.  The sign convention
    is such that jac(u).n > 0 selects the exterior datum; callers assembling
    with outward normals should use :func:`outward_boundary_flux`.
    """
    u = np.asarray(u, dtype=float)
    u_b = np.asarray(u_b, dtype=float)
    n = np.asarray(n, dtype=float)
    speed = np.einsum(
        "...x,...x->...", law.jacobian(u), np.broadcast_to(n, u.shape + (2,))
    )
    return np.where(speed > 0.0, law.flux_normal(u_b, n), law.flux_normal(u, n))


def outward_boundary_flux(law: ConservationLaw, u, u_b, n_out):
    """Upwind boundary flux through the outward normal: exterior data on
    inflow (jac(u).n_out < 0), interior trace on outflow."""
    return -upwind_boundary_flux(law, u, u_b, -np.asarray(n_out, dtype=float))


def rusanov_interface_flux(law: ConservationLaw, u_left, u_right, n):
    """Local Lax-Friedrichs two-point flux through normal n (may be scaled).

    0.5 (f(uL) + f(uR)) . n - 0.5 a (uR - uL) with
    a = max(|jac(uL) . n|, |jac(uR) . n|).  Antisymmetric and consistent.
    """
    u_left = np.asarray(u_left, dtype=float)
    u_right = np.asarray(u_right, dtype=float)
    fl = law.flux_normal(u_left, n)
    fr = law.flux_normal(u_right, n)
    n = np.asarray(n, dtype=float)
    al = np.abs(
        np.einsum("...x,...x->...", law.jacobian(u_left), np.broadcast_to(n, u_left.shape + (2,)))
    )
    ar = np.abs(
        np.einsum("...x,...x->...", law.jacobian(u_right), np.broadcast_to(n, u_right.shape + (2,)))
    )
    return 0.5 * (fl + fr) - 0.5 * np.maximum(al, ar) * (u_right - u_left)


# -- built-in laws ------------------------------------------------------


def advection_law(a: float, b: float) -> ConservationLaw:
    ab = np.array([a, b])

    def flux(u):
        u = np.asarray(u, dtype=float)
        return u[..., None] * ab

    def jac(u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(ab, u.shape + (2,)).copy()

    def roe(u_nodal):
        u_nodal = np.asarray(u_nodal, dtype=float)
        return np.broadcast_to(ab, u_nodal.shape[:-1] + (2,)).copy()

    return ConservationLaw(f"advection({a:g},{b:g})", flux, jac, roe)


def burgers_law() -> ConservationLaw:
    def flux(u):
        u = np.asarray(u, dtype=float)
        return np.stack([0.5 * u * u, u], axis=-1)

    def jac(u):
        u = np.asarray(u, dtype=float)
        return np.stack([u, np.ones_like(u)], axis=-1)

    def roe(u_nodal):
        # arithmetic nodal mean in the first component
        u_nodal = np.asarray(u_nodal, dtype=float)
        ubar = u_nodal.mean(axis=-1)
        return np.stack([ubar, np.ones_like(ubar)], axis=-1)

    return ConservationLaw("burgers", flux, jac, roe)


def square_entropy(law: ConservationLaw) -> EntropyPair:
    """U = u^2/2 with the closed-form compatible flux for the built-in laws."""

    def U(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u

    def v(u):
        return np.asarray(u, dtype=float)

    if law.name.startswith("advection"):
        ab = law.jacobian(0.0)

        def g(u):
            u = np.asarray(u, dtype=float)
            return 0.5 * u[..., None] ** 2 * ab

    elif law.name == "burgers":

        def g(u):
            u = np.asarray(u, dtype=float)
            return np.stack([u**3 / 3.0, 0.5 * u * u], axis=-1)

    else:
        raise ValueError(f"no closed-form square-entropy flux for law {law.name!r}")

    return EntropyPair(U, v, g, law)


# -- built-in problems ---------------------------------------------------


def _advection_problem(a=1.0, b=2.0, name="advection"):
    law = advection_law(a, b)

    # value transported from the inflow along characteristics; xi labels them
    def exact(x, y):
        xi = np.asarray(x) - (a / b) * np.asarray(y)
        return np.sin(2.0 * np.pi * xi)

    return Problem(
        name=name,
        law=law,
        bc=BoundaryData(exact),
        entropy=square_entropy(law),
        exact=exact,
        characteristic_guess=True,
    )


def _advection_step_problem(a=1.0, b=2.0):
    law = advection_law(a, b)

    def exact(x, y):
        xi = np.asarray(x) - (a / b) * np.asarray(y)
        return np.where(xi < 0.25, 1.0, 0.0)

    return Problem(
        name="advection-step",
        law=law,
        bc=BoundaryData(exact),
        entropy=square_entropy(law),
        exact=exact,
        characteristic_guess=True,
    )


def _burgers_fan(x, y):
    """Compression fan (1.5 - 2x)/(1 - 2y) for y < 1/2; straight shock with
    states 1.5 / -0.5 beyond the focal point (3/4, 1/2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = 1.0 - 2.0 * y
    with np.errstate(divide="ignore", invalid="ignore"):
        fan = (1.5 - 2.0 * x) / denom
    shock_x = 0.75 + 0.5 * (y - 0.5)
    beyond = np.where(x < shock_x, 1.5, -0.5)
    return np.where(y < 0.5, fan, beyond)


def _burgers_problem():
    law = burgers_law()
    return Problem(
        name="burgers",
        law=law,
        bc=BoundaryData(_burgers_fan),
        entropy=square_entropy(law),
        exact=_burgers_fan,
    )


def _burgers_shock_problem():
    law = burgers_law()

    def exact(x, y):
        return np.clip(_burgers_fan(x, y), -0.5, 1.5)

    return Problem(
        name="burgers-shock",
        law=law,
        bc=BoundaryData(exact),
        entropy=square_entropy(law),
        exact=exact,
    )


def builtin_problems() -> dict:
    """Registry of named verification problems."""
    problems = [
        _advection_problem(),
        _advection_step_problem(),
        _burgers_problem(),
        _burgers_shock_problem(),
    ]
    return {p.name: p for p in problems}
