"""Three-dimensional reconstruction of w = grad(psi) x grad(Theta) and its curl.

A FieldStack holds the per-surface solutions on a ladder of psi levels.
In-surface derivatives are spectral; derivatives across levels use centered
differences (second order in the level spacing); evaluation between levels is
cubic in psi through the stacked nodal values.  The curl keeps all three
contravariant components, so its normal part measures the pointwise residual
of the surface equation rather than being zero by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import spectral
from .errors import StackRangeError
from .geometry import SurfaceFamily, ToroidalCoords, covariant_metric, metric_at_points
from .pde import (
    PeriodicGrid,
    SurfaceSolution,
    assemble_coefficients,
    assemble_source,
    solve_periodic,
)
from .profiles import ScalarProfile

TWO_PI = 2.0 * math.pi


@dataclass
class CartesianVectorField:
    """Vector field evaluator on Cartesian points, with optional curl."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    curl_evaluator: Callable[[np.ndarray], np.ndarray] | None = None
    provenance: str = "analytic"

    def __call__(self, p) -> np.ndarray:
        return self.evaluator(np.asarray(p, float))

    def curl(self, p) -> np.ndarray:
        if self.curl_evaluator is None:
            raise ValueError("field carries no curl evaluator")
        return self.curl_evaluator(np.asarray(p, float))


# ---------------------------------------------------------------------------
# finite-difference vector calculus (verification side)
# ---------------------------------------------------------------------------


def divergence_fd(field_eval, p, h: float = 1e-4, richardson: bool = False):
    """Central-difference divergence in Cartesian coordinates."""
    if richardson:
        d1 = divergence_fd(field_eval, p, h)
        d2 = divergence_fd(field_eval, p, 0.5 * h)
        return (4.0 * d2 - d1) / 3.0
    p = np.asarray(p, float)
    out = 0.0
    for i in range(3):
        dp = np.zeros(3)
        dp[i] = h
        out = out + (field_eval(p + dp)[..., i] - field_eval(p - dp)[..., i]) / (2 * h)
    return out


def curl_fd(field_eval, p, h: float = 1e-4, richardson: bool = False):
    """Central-difference curl in Cartesian coordinates."""
    if richardson:
        c1 = curl_fd(field_eval, p, h)
        c2 = curl_fd(field_eval, p, 0.5 * h)
        return (4.0 * c2 - c1) / 3.0
    p = np.asarray(p, float)
    jac = []
    for i in range(3):
        dp = np.zeros(3)
        dp[i] = h
        jac.append((field_eval(p + dp) - field_eval(p - dp)) / (2 * h))
    # jac[i][..., j] = d w_j / d x_i
    out = np.empty(np.shape(p))
    out[..., 0] = jac[1][..., 2] - jac[2][..., 1]
    out[..., 1] = jac[2][..., 0] - jac[0][..., 2]
    out[..., 2] = jac[0][..., 1] - jac[1][..., 0]
    return out


def force_term(field_eval, curl_eval, p) -> np.ndarray:
    """(curl w) x w at the point."""
    p = np.asarray(p, float)
    return np.cross(curl_eval(p), field_eval(p))


def mhd_residual(field_eval, curl_eval, family: SurfaceFamily, p) -> np.ndarray:
    """| (curl w) x w - grad(psi) |; diagnostic distance to force balance."""
    f = force_term(field_eval, curl_eval, p)
    return np.linalg.norm(f - family.grad_psi(p), axis=-1)


def wrap_with_f(
    base: CartesianVectorField, family: SurfaceFamily, f_spec: ScalarProfile
) -> CartesianVectorField:
    """Rescale a surface-tangent field by f(psi).

    The wrapped curl is f * curl(w) + f'(psi) grad(psi) x w, so for a
    curl-free tangent base field the wrapped force is
    -(1/2) d(f^2)/dpsi |w|^2 grad(psi).
    """

    def evaluator(p):
        return f_spec(family.psi(p))[..., None] * base(p)

    curl_evaluator = None
    if base.curl_evaluator is not None:

        def curl_evaluator(p):
            fs = f_spec(family.psi(p))[..., None]
            dfs = f_spec.derivative(family.psi(p))[..., None]
            return fs * base.curl(p) + dfs * np.cross(family.grad_psi(p), base(p))

    return CartesianVectorField(
        evaluator=evaluator,
        curl_evaluator=curl_evaluator,
        provenance=base.provenance,
    )


# ---------------------------------------------------------------------------
# stacked surface solutions
# ---------------------------------------------------------------------------


def _dpsi_weights(levels: np.ndarray) -> np.ndarray:
    """Rows of second-order first-derivative weights at each level."""
    k_count = len(levels)
    w = np.zeros((k_count, k_count))
    for k in range(k_count):
        if 0 < k < k_count - 1:
            idx = (k - 1, k, k + 1)
        elif k == 0:
            idx = (0, 1, 2)
        else:
            idx = (k_count - 3, k_count - 2, k_count - 1)
        x = levels[list(idx)] - levels[k]
        # derivative of the quadratic through the three nodes
        v = np.zeros(3)
        for a in range(3):
            others = [b for b in range(3) if b != a]
            num = sum(np.prod([-x[c] for c in others if c != b]) for b in others)
            v[a] = num / np.prod([x[a] - x[b] for b in others])
        w[k, list(idx)] = v
    return w


class FieldStack:
    """Solutions on a ladder of psi levels plus everything needed to evaluate
    w and curl(w) anywhere strictly inside the ladder."""

    def __init__(
        self,
        family: SurfaceFamily,
        grid: PeriodicGrid,
        solutions: Sequence[SurfaceSolution],
    ):
        if len(solutions) < 3:
            raise ValueError("a stack needs at least 3 levels for psi derivatives")
        order = np.argsort([s.psi_level for s in solutions])
        self.solutions = [solutions[k] for k in order]
        self.levels = np.array([s.psi_level for s in self.solutions])
        if np.any(np.diff(self.levels) <= 0):
            raise ValueError("psi levels must be strictly increasing")
        mn = {(s.M, s.N) for s in self.solutions}
        if len(mn) != 1:
            raise ValueError("all solutions in a stack must share (M, N)")
        self.M, self.N = mn.pop()
        self.family = family
        self.grid = grid
        self._prepare_level_arrays()
        self._basis = [
            CubicSpline(self.levels, np.eye(len(self.levels))[:, k])
            for k in range(len(self.levels))
        ]

    # -- precomputation ----------------------------------------------------
    def _prepare_level_arrays(self):
        fam, grid = self.family, self.grid
        mu, nu = grid.mesh()
        self.theta_mu = []
        self.theta_nu = []
        wcov_mu, wcov_nu, wcov_psi = [], [], []
        for sol in self.solutions:
            pts = fam.invert(mu, nu, np.full(grid.shape, sol.psi_level))
            sample = covariant_metric(metric_at_points(fam, pts))
            gl, jac = sample.g_lower, sample.jacobian
            t_mu = self.M + spectral.deriv_mu(sol.rho.values)
            t_nu = self.N + spectral.deriv_nu(sol.rho.values)
            self.theta_mu.append(t_mu)
            self.theta_nu.append(t_nu)
            wcov_mu.append(jac * (gl[..., 0, 1] * t_mu - gl[..., 0, 0] * t_nu))
            wcov_nu.append(jac * (gl[..., 1, 1] * t_mu - gl[..., 0, 1] * t_nu))
            wcov_psi.append(jac * (gl[..., 1, 2] * t_mu - gl[..., 0, 2] * t_nu))
        self.wcov_mu = np.array(wcov_mu)
        self.wcov_nu = np.array(wcov_nu)
        self.wcov_psi = np.array(wcov_psi)
        dw = _dpsi_weights(self.levels)
        self.dpsi_wcov_mu = np.einsum("kl,lij->kij", dw, self.wcov_mu)
        self.dpsi_wcov_nu = np.einsum("kl,lij->kij", dw, self.wcov_nu)
        self.dmu_wcov_psi = np.array([spectral.deriv_mu(a) for a in self.wcov_psi])
        self.dnu_wcov_psi = np.array([spectral.deriv_nu(a) for a in self.wcov_psi])
        self.dmu_wcov_nu = np.array([spectral.deriv_mu(a) for a in self.wcov_nu])
        self.dnu_wcov_mu = np.array([spectral.deriv_nu(a) for a in self.wcov_mu])

    # -- interpolation helpers ----------------------------------------------
    def _check_range(self, psi, strict: bool):
        psi = np.atleast_1d(psi)
        lo, hi = self.levels[0], self.levels[-1]
        bad = (psi < lo) | (psi > hi) if not strict else (psi <= lo) | (psi >= hi)
        if np.any(bad):
            raise StackRangeError(
                f"psi outside the stack range [{lo:g}, {hi:g}] "
                f"({int(np.count_nonzero(bad))} point(s))"
            )

    def _weights(self, psi) -> np.ndarray:
        psi = np.atleast_1d(np.asarray(psi, float))
        return np.stack([basis(psi) for basis in self._basis], axis=-1)

    def _interp_series(self, arrays: np.ndarray, lam: np.ndarray, mu, nu) -> np.ndarray:
        vals = np.stack(
            [spectral.eval_series(arrays[k], mu, nu) for k in range(arrays.shape[0])],
            axis=-1,
        )
        return np.sum(lam * vals, axis=-1)

    # -- evaluation -----------------------------------------------------------
    def w_at(self, coords: ToroidalCoords) -> np.ndarray:
        """w = Theta_mu grad(psi) x grad(mu) + Theta_nu grad(psi) x grad(nu)."""
        mu = np.atleast_1d(coords.mu)
        nu = np.atleast_1d(coords.nu)
        psi = np.atleast_1d(coords.psi)
        self._check_range(psi, strict=False)
        lam = self._weights(psi)
        t_mu = self._interp_series(np.array(self.theta_mu), lam, mu, nu)
        t_nu = self._interp_series(np.array(self.theta_nu), lam, mu, nu)
        pts = self.family.invert(mu, nu, psi)
        gm, gn, gp = self.family.gradients(pts)
        w = t_mu[..., None] * np.cross(gp, gm) + t_nu[..., None] * np.cross(gp, gn)
        return w

    def curl_at(self, coords: ToroidalCoords) -> np.ndarray:
        """Contravariant curl; psi derivatives from the level ladder."""
        mu = np.atleast_1d(coords.mu)
        nu = np.atleast_1d(coords.nu)
        psi = np.atleast_1d(coords.psi)
        self._check_range(psi, strict=True)
        lam = self._weights(psi)
        dpsi_w_mu = self._interp_series(self.dpsi_wcov_mu, lam, mu, nu)
        dpsi_w_nu = self._interp_series(self.dpsi_wcov_nu, lam, mu, nu)
        dmu_w_psi = self._interp_series(self.dmu_wcov_psi, lam, mu, nu)
        dnu_w_psi = self._interp_series(self.dnu_wcov_psi, lam, mu, nu)
        dmu_w_nu = self._interp_series(self.dmu_wcov_nu, lam, mu, nu)
        dnu_w_mu = self._interp_series(self.dnu_wcov_mu, lam, mu, nu)
        pts = self.family.invert(mu, nu, psi)
        e_mu, e_nu, e_psi, jac = self.family.tangent_basis(pts)
        c_mu = jac * (dnu_w_psi - dpsi_w_nu)
        c_nu = jac * (dpsi_w_mu - dmu_w_psi)
        c_psi = jac * (dmu_w_nu - dnu_w_mu)
        return (
            c_mu[..., None] * e_mu + c_nu[..., None] * e_nu + c_psi[..., None] * e_psi
        )

    def as_field(self) -> CartesianVectorField:
        """Cartesian-point evaluators via the analytic forward map."""

        def evaluator(p):
            return self.w_at(self.family.toroidal_coords(p))

        def curl_evaluator(p):
            return self.curl_at(self.family.toroidal_coords(p))

        return CartesianVectorField(
            evaluator=evaluator,
            curl_evaluator=curl_evaluator,
            provenance="numeric stack",
        )


def build_stack(
    family: SurfaceFamily,
    levels,
    grid: PeriodicGrid,
    M: int = 1,
    N: int = 0,
    tol: float = 1e-8,
    jobs: int = 1,
) -> FieldStack:
    """Solve the periodic problem on every level and assemble the stack.

    Levels are independent; with jobs > 1 they are solved concurrently.
    """
    levels = np.asarray(levels, float)

    def solve_one(psi_level):
        coeffs = assemble_coefficients(family, psi_level, grid)
        source = assemble_source(coeffs, M, N)
        return solve_periodic(coeffs, source, tol=tol, M=M, N=N)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            solutions = list(pool.map(solve_one, levels))
    else:
        solutions = [solve_one(p) for p in levels]
    return FieldStack(family, grid, solutions)


def reconstruct_w(stack: FieldStack, coords: ToroidalCoords) -> np.ndarray:
    return stack.w_at(coords)


def reconstruct_curl_w(stack: FieldStack, coords: ToroidalCoords) -> np.ndarray:
    return stack.curl_at(coords)


# ---------------------------------------------------------------------------
# volume energy
# ---------------------------------------------------------------------------


def volume_energy(stack: FieldStack, f_spec: ScalarProfile | None = None) -> float:
    """(1/2) integral of |f(psi) w|^2 over the hollow torus of the stack.

    Curvilinear quadrature: trapezoid over the periodic angles (spectral
    accuracy) and trapezoid across the psi ladder; dV = dmu dnu dpsi / J.
    """
    fam, grid = stack.family, stack.grid
    mu, nu = grid.mesh()
    per_level = np.empty(len(stack.levels))
    for k, psi_level in enumerate(stack.levels):
        pts = fam.invert(mu, nu, np.full(grid.shape, psi_level))
        gm, gn, gp = fam.gradients(pts)
        jac = np.einsum("...i,...i->...", gm, np.cross(gn, gp))
        t_mu = stack.theta_mu[k]
        t_nu = stack.theta_nu[k]
        w = t_mu[..., None] * np.cross(gp, gm) + t_nu[..., None] * np.cross(gp, gn)
        w2 = np.einsum("...i,...i->...", w, w)
        if f_spec is not None:
            w2 = w2 * float(f_spec(psi_level)) ** 2
        per_level[k] = 0.5 * TWO_PI**2 * float(np.mean(w2 / jac))
    return float(np.trapezoid(per_level, stack.levels))
