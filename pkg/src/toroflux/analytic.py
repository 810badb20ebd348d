"""Closed-form vector fields on toroidal foliations, used as exact oracles.

Four constructions:

* a non-solenoidal tangent field f(psi) grad(alpha) on the phase-rippled
  torus, whose force is parallel to grad(psi) while its divergence is not
  zero off the midplane;
* harmonic tangent fields f(psi) xi with xi = grad(phi + eps * P) for a
  harmonic perturbation P, covering the sheared-exponential surfaces and the
  wider conjugate-pair class;
* the axisymmetric force-balance example sqrt(C - 2 psi^2) grad(theta) +
  g(phi) grad(phi), which satisfies pointwise force balance but is not
  solenoidal;
* the anisotropic pressure tensor closing the harmonic solutions as
  equilibria, Pi = (P - gamma w^2 / 2) I + gamma w w with P = 0 and
  gamma = 1 - 1/f^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .field import CartesianVectorField, curl_fd
from .geometry import (
    Axisym,
    ConjugateHarmonic,
    ExpSheared,
    PhasePerturbed,
    SurfaceFamily,
    cylinder_radius,
    grad_phi,
)
from .profiles import AngleProfile, ScalarProfile


# ---------------------------------------------------------------------------
# non-solenoidal example on the phase-rippled torus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NonSolenoidalField:
    """w = f(psi) grad(alpha), alpha = arctan(z / (r - r0))."""

    r0: float = 1.0
    eps: float = 0.1
    m: int = 4
    f_spec: ScalarProfile = None

    def __post_init__(self):
        if self.f_spec is None:
            object.__setattr__(self, "f_spec", ScalarProfile.polynomial([0.0, 1.0]))

    @property
    def family(self) -> PhasePerturbed:
        return PhasePerturbed(r0=self.r0, eps=self.eps, m=self.m)

    def _check(self, p):
        p = np.asarray(p, float)
        r = cylinder_radius(p)
        d2 = (r - self.r0) ** 2 + p[..., 2] ** 2
        if np.any(d2 <= 0):
            raise DomainError("alpha undefined where r = r0 and z = 0")
        return p, r, d2

    def w(self, p):
        p, _, _ = self._check(p)
        fam = self.family
        return self.f_spec(fam.psi(p))[..., None] * fam.grad_poloidal(p)

    def curl_w(self, p):
        p, _, _ = self._check(p)
        fam = self.family
        df = self.f_spec.derivative(fam.psi(p))
        return df[..., None] * np.cross(fam.grad_psi(p), fam.grad_poloidal(p))

    def div_w(self, p):
        p, r, d2 = self._check(p)
        return -p[..., 2] * self.f_spec(self.family.psi(p)) / (r * d2)

    def force_coefficient(self, p):
        """lambda with (curl w) x w = lambda grad(psi); equals -f f' |grad alpha|^2."""
        p, _, d2 = self._check(p)
        psi = self.family.psi(p)
        return -self.f_spec(psi) * self.f_spec.derivative(psi) / d2

    def field(self) -> CartesianVectorField:
        return CartesianVectorField(self.w, self.curl_w, provenance="analytic")


def eval_nonsolenoidal(params: NonSolenoidalField, p):
    """(w, curl w, div w, lambda) of the non-solenoidal tangent field."""
    return (
        params.w(p),
        params.curl_w(p),
        params.div_w(p),
        params.force_coefficient(p),
    )


# ---------------------------------------------------------------------------
# harmonic tangent fields
# ---------------------------------------------------------------------------


def _perturbation_terms(family: SurfaceFamily, p):
    """P gradient and Hessian of the harmonic perturbation tied to the family."""
    p = np.asarray(p, float)
    zeros = np.zeros(p.shape[:-1])
    if isinstance(family, ExpSheared):
        # P = x, Q = y
        ones = np.ones(p.shape[:-1])
        grad = np.stack([ones, zeros, zeros], axis=-1)
        hess = np.zeros(p.shape[:-1] + (2, 2))
        return grad, hess
    if isinstance(family, ConjugateHarmonic):
        m = family.m
        pp, qq = family.conjugate_pair(p)
        grad = np.stack([m * pp, -m * qq, zeros], axis=-1)
        hess = np.empty(p.shape[:-1] + (2, 2))
        hess[..., 0, 0] = m**2 * pp
        hess[..., 0, 1] = hess[..., 1, 0] = -(m**2) * qq
        hess[..., 1, 1] = -(m**2) * pp
        return grad, hess
    raise TypeError(f"no harmonic perturbation attached to {type(family).__name__}")


@dataclass(frozen=True)
class HarmonicTangentField:
    """w = f(psi) xi with xi = grad(phi + eps * P), exactly tangent to psi."""

    family: SurfaceFamily
    f_spec: ScalarProfile

    def __post_init__(self):
        if not isinstance(self.family, (ExpSheared, ConjugateHarmonic)):
            raise TypeError("harmonic tangent fields live on the sheared families")

    @property
    def eps(self) -> float:
        return self.family.eps

    def xi(self, p):
        p = np.asarray(p, float)
        grad_p, _ = _perturbation_terms(self.family, p)
        return grad_phi(p) + self.eps * grad_p

    def xi_field(self) -> CartesianVectorField:
        return CartesianVectorField(
            self.xi, lambda p: np.zeros(np.shape(np.asarray(p))), provenance="analytic"
        )

    def xi_sq(self, p):
        """|xi|^2 = 1/r^2 + 2 eps (x P_y - y P_x)/r^2 + eps^2 |grad P|^2."""
        p = np.asarray(p, float)
        r2 = p[..., 0] ** 2 + p[..., 1] ** 2
        grad_p, _ = _perturbation_terms(self.family, p)
        cross = p[..., 0] * grad_p[..., 1] - p[..., 1] * grad_p[..., 0]
        norm2 = grad_p[..., 0] ** 2 + grad_p[..., 1] ** 2
        return 1.0 / r2 + 2.0 * self.eps * cross / r2 + self.eps**2 * norm2

    def grad_xi_sq(self, p):
        p = np.asarray(p, float)
        x, y = p[..., 0], p[..., 1]
        r2 = x**2 + y**2
        grad_p, hess = _perturbation_terms(self.family, p)
        px, py = grad_p[..., 0], grad_p[..., 1]
        pxx, pxy, pyy = hess[..., 0, 0], hess[..., 0, 1], hess[..., 1, 1]
        cross = x * py - y * px
        out = np.zeros_like(p)
        # d/dx and d/dy of 1/r^2
        out[..., 0] = -2.0 * x / r2**2
        out[..., 1] = -2.0 * y / r2**2
        # ... of 2 eps cross / r^2
        dcross_dx = py + x * pxy - y * pxx
        dcross_dy = x * pyy - px - y * pxy
        out[..., 0] += 2.0 * self.eps * (dcross_dx / r2 - 2.0 * x * cross / r2**2)
        out[..., 1] += 2.0 * self.eps * (dcross_dy / r2 - 2.0 * y * cross / r2**2)
        # ... of eps^2 |grad P|^2
        out[..., 0] += 2.0 * self.eps**2 * (px * pxx + py * pxy)
        out[..., 1] += 2.0 * self.eps**2 * (px * pxy + py * pyy)
        return out

    def w(self, p):
        return self.f_spec(self.family.psi(p))[..., None] * self.xi(p)

    def curl_w(self, p):
        df = self.f_spec.derivative(self.family.psi(p))
        return df[..., None] * np.cross(self.family.grad_psi(p), self.xi(p))

    def w_sq(self, p):
        return self.f_spec(self.family.psi(p)) ** 2 * self.xi_sq(p)

    def force(self, p):
        """Closed form -(1/2) d(f^2)/dpsi |xi|^2 grad(psi)."""
        psi = self.family.psi(p)
        fac = -self.f_spec(psi) * self.f_spec.derivative(psi) * self.xi_sq(p)
        return fac[..., None] * self.family.grad_psi(p)

    def tangency_defect(self, p):
        """|xi . grad(psi)| normalized; measured, not assumed."""
        xi = self.xi(p)
        gp = self.family.grad_psi(p)
        num = np.abs(np.einsum("...i,...i->...", xi, gp))
        return num / (
            np.linalg.norm(xi, axis=-1) * np.linalg.norm(gp, axis=-1)
        )

    def field(self) -> CartesianVectorField:
        return CartesianVectorField(self.w, self.curl_w, provenance="analytic")


def eval_harmonic_xi(eps: float, p):
    """xi = grad(phi) + eps grad(x) = (-y/r^2 + eps, x/r^2, 0)."""
    p = np.asarray(p, float)
    out = grad_phi(p).copy()
    out[..., 0] += eps
    return out


def eval_harmonic_solution(eps: float, f_spec: ScalarProfile, p, r0: float = 1.0):
    """(w, curl w, force) of the sheared-exponential harmonic solution."""
    sol = HarmonicTangentField(ExpSheared(r0=r0, eps=eps), f_spec)
    return sol.w(p), sol.curl_w(p), sol.force(p)


def eval_conjugate_family(eps: float, m: int, p, r0: float = 1.0):
    """(xi, psi) for the conjugate-pair family."""
    fam = ConjugateHarmonic(r0=r0, eps=eps, m=m)
    sol = HarmonicTangentField(fam, ScalarProfile.constant(1.0))
    return sol.xi(p), fam.psi(p)


# ---------------------------------------------------------------------------
# axisymmetric force-balance example without solenoidality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumExample:
    """w = sqrt(C - 2 psi^2) grad(theta) + g(phi) grad(phi) on circular tori."""

    C: float = 1.0
    g_spec: AngleProfile = None
    r0: float = 1.0

    def __post_init__(self):
        if self.g_spec is None:
            object.__setattr__(self, "g_spec", AngleProfile.zero())
        if self.C <= 0:
            raise ValueError("C must be positive")

    @property
    def family(self) -> Axisym:
        return Axisym(r0=self.r0)

    def _amplitude(self, psi):
        arg = self.C - 2.0 * psi**2
        if np.any(arg <= 0):
            raise DomainError("C - 2 psi^2 <= 0: amplitude undefined")
        return np.sqrt(arg)

    def w(self, p):
        p = np.asarray(p, float)
        fam = self.family
        psi = fam.psi(p)
        phi = np.arctan2(p[..., 1], p[..., 0])
        out = self._amplitude(psi)[..., None] * fam.grad_poloidal(p)
        out += self.g_spec(phi)[..., None] * grad_phi(p)
        return out

    def curl_w(self, p):
        # curl(g(phi) grad phi) = g' grad(phi) x grad(phi) = 0
        p = np.asarray(p, float)
        fam = self.family
        psi = fam.psi(p)
        dampl = -2.0 * psi / self._amplitude(psi)
        return dampl[..., None] * np.cross(fam.grad_psi(p), fam.grad_poloidal(p))

    def div_w(self, p):
        p = np.asarray(p, float)
        fam = self.family
        psi = fam.psi(p)
        r = cylinder_radius(p)
        phi = np.arctan2(p[..., 1], p[..., 0])
        return -p[..., 2] * self._amplitude(psi) / (r * 2.0 * psi) + self.g_spec.derivative(
            phi
        ) / r**2

    def force_balance_residual(self, p, h: float = 1e-4):
        """| (curl w) x w - grad psi | with the curl taken by finite differences."""
        p = np.asarray(p, float)
        curl = curl_fd(self.w, p, h=h, richardson=True)
        force = np.cross(curl, self.w(p))
        return np.linalg.norm(force - self.family.grad_psi(p), axis=-1)

    def field(self) -> CartesianVectorField:
        return CartesianVectorField(self.w, self.curl_w, provenance="analytic")


def eval_equilibrium_nodiv(C: float, g_spec: AngleProfile, r0: float, p):
    """(w, force-balance residual) of the axisymmetric example."""
    ex = EquilibriumExample(C=C, g_spec=g_spec, r0=r0)
    return ex.w(p), ex.force_balance_residual(p)


# ---------------------------------------------------------------------------
# anisotropic pressure closure
# ---------------------------------------------------------------------------


def anisotropy_gamma(f_spec: ScalarProfile, psi):
    """gamma = 1 - 1/f^2; the zero-reference-pressure closure."""
    f = f_spec(psi)
    if np.any(f == 0):
        raise DomainError("gamma singular where f(psi) = 0")
    return 1.0 - 1.0 / f**2


def pressure_tensor(family: SurfaceFamily, f_spec: ScalarProfile, w_eval, p):
    """Pi = (P - gamma w^2 / 2) I + gamma w w with P = 0."""
    p = np.asarray(p, float)
    w = w_eval(p)
    gamma = anisotropy_gamma(f_spec, family.psi(p))
    w2 = np.einsum("...i,...i->...", w, w)
    eye = np.eye(3)
    out = -0.5 * (gamma * w2)[..., None, None] * eye
    out += gamma[..., None, None] * np.einsum("...i,...j->...ij", w, w)
    return out


def pressure_divergence(
    family: SurfaceFamily,
    f_spec: ScalarProfile,
    field: CartesianVectorField,
    p,
    h: float = 1e-4,
    richardson: bool = True,
):
    """(div Pi, (curl w) x w, mismatch) with div Pi by central differences."""

    def div_pi(step):
        out = 0.0
        for j in range(3):
            dp = np.zeros(3)
            dp[j] = step
            plus = pressure_tensor(family, f_spec, field, np.asarray(p, float) + dp)
            minus = pressure_tensor(family, f_spec, field, np.asarray(p, float) - dp)
            out = out + (plus[..., j, :] - minus[..., j, :]) / (2 * step)
        return out

    div = div_pi(h)
    if richardson:
        div = (4.0 * div_pi(0.5 * h) - div) / 3.0
    force = np.cross(field.curl(p), field(p))
    mismatch = np.linalg.norm(div - force, axis=-1)
    return div, force, mismatch


def anisotropic_balance_residual(
    family: SurfaceFamily, f_spec: ScalarProfile, field: CartesianVectorField, p
):
    """Residual of (1 - gamma)(curl w) x w = -w^2 grad(gamma)/2 + (w . grad gamma) w.

    grad(gamma) = 2 f'/f^3 grad(psi) is analytic, so this checks the closure
    identity without finite differences.
    """
    p = np.asarray(p, float)
    psi = family.psi(p)
    w = field(p)
    force = np.cross(field.curl(p), w)
    gamma = anisotropy_gamma(f_spec, psi)
    grad_gamma = (
        2.0 * f_spec.derivative(psi) / f_spec(psi) ** 3
    )[..., None] * family.grad_psi(p)
    w2 = np.einsum("...i,...i->...", w, w)
    w_dot = np.einsum("...i,...i->...", w, grad_gamma)
    rhs = -0.5 * w2[..., None] * grad_gamma + w_dot[..., None] * w
    return np.linalg.norm((1.0 - gamma)[..., None] * force - rhs, axis=-1)
