"""Analytic families of nested toroidal surfaces and their curvilinear frames.

Each family defines a smooth surface label ``psi`` whose level sets are nested
tori, together with angle coordinates ``(mu, nu)`` spanning every surface.
``mu`` is always the cylindrical toroidal angle ``phi``; ``nu`` is a poloidal
angle built from the family's own radial/vertical displacement, so the triple
``(mu, nu, psi)`` is an invertible curvilinear frame on the working annulus.

All evaluators are vectorized over trailing-axis-3 point arrays and are pure,
so they may be called concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateCoordinatesError,
    DomainError,
    InversionError,
)

TWO_PI = 2.0 * math.pi

# Below this Jacobian the frame is treated as degenerate (untrusted).
JACOBIAN_FLOOR = 1e-8
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


def _pts(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise ValueError("points must have a trailing axis of length 3")
    return p


def cylinder_radius(p) -> np.ndarray:
    p = _pts(p)
    return np.hypot(p[..., 0], p[..., 1])


def _require_off_axis(r) -> None:
    if np.any(r <= 1e-300):
        raise DomainError("evaluation on the vertical axis r=0")


def grad_phi(p) -> np.ndarray:
    """Gradient of the toroidal angle, (-y/r^2, x/r^2, 0)."""
    p = _pts(p)
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    _require_off_axis(np.sqrt(r2))
    out = np.zeros_like(p)
    out[..., 0] = -p[..., 1] / r2
    out[..., 1] = p[..., 0] / r2
    return out


def _grad_r(p) -> np.ndarray:
    p = _pts(p)
    r = cylinder_radius(p)
    _require_off_axis(r)
    out = np.zeros_like(p)
    out[..., 0] = p[..., 0] / r
    out[..., 1] = p[..., 1] / r
    return out


def _wrap_angle(a) -> np.ndarray:
    return np.mod(a, TWO_PI)


@dataclass(frozen=True)
class ToroidalCoords:
    """Curvilinear coordinates (mu, nu, psi); angles live in [0, 2*pi)."""

    mu: np.ndarray
    nu: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _wrap_angle(np.asarray(self.mu, float)))
        object.__setattr__(self, "nu", _wrap_angle(np.asarray(self.nu, float)))
        object.__setattr__(self, "psi", np.asarray(self.psi, float))


def _newton_scalar_field(f, df, x0, scale, what: str) -> np.ndarray:
    """Vectorized 1D Newton iteration; raises when any point stalls."""
    x = np.array(x0, dtype=float, copy=True)
    tol = NEWTON_TOL * np.maximum(1.0, np.abs(scale))
    for _ in range(NEWTON_MAX_ITER):
        fx = f(x)
        if np.all(np.abs(fx) <= tol):
            return x
        x = x - fx / df(x)
    fx = f(x)
    bad = int(np.count_nonzero(np.abs(fx) > tol))
    raise InversionError(
        f"{what}: Newton did not converge at {bad} point(s) "
        f"after {NEWTON_MAX_ITER} iterations (max |f| = {np.max(np.abs(fx)):.3e})"
    )


class SurfaceFamily:
    """Base class: one concrete subclass per analytic family."""

    # --- surface label ---------------------------------------------------
    def psi(self, p) -> np.ndarray:
        raise NotImplementedError

    def grad_psi(self, p) -> np.ndarray:
        raise NotImplementedError

    # --- poloidal angle ---------------------------------------------------
    def poloidal_angle(self, p) -> np.ndarray:
        raise NotImplementedError

    def grad_poloidal(self, p) -> np.ndarray:
        raise NotImplementedError

    # --- inverse map ------------------------------------------------------
    def invert(self, mu, nu, psi) -> np.ndarray:
        """Cartesian point with the given curvilinear coordinates."""
        raise NotImplementedError

    # --- shared machinery ---------------------------------------------------
    def toroidal_coords(self, p) -> ToroidalCoords:
        p = _pts(p)
        mu = np.arctan2(p[..., 1], p[..., 0])
        return ToroidalCoords(mu=mu, nu=self.poloidal_angle(p), psi=self.psi(p))

    def to_cartesian(self, coords: ToroidalCoords) -> np.ndarray:
        return self.invert(coords.mu, coords.nu, coords.psi)

    def gradients(self, p):
        """(grad mu, grad nu, grad psi) stacked as three (...,3) arrays."""
        return grad_phi(p), self.grad_poloidal(p), self.grad_psi(p)

    def jacobian(self, p) -> np.ndarray:
        """J = grad(mu) . grad(nu) x grad(psi)."""
        gm, gn, gp = self.gradients(p)
        return np.einsum("...i,...i->...", gm, np.cross(gn, gp))

    def tangent_basis(self, p):
        """Tangent vectors (e_mu, e_nu, e_psi) and J, from the dual frame."""
        gm, gn, gp = self.gradients(p)
        jac = np.einsum("...i,...i->...", gm, np.cross(gn, gp))
        inv = 1.0 / jac[..., None]
        e_mu = np.cross(gn, gp) * inv
        e_nu = np.cross(gp, gm) * inv
        e_psi = np.cross(gm, gn) * inv
        return e_mu, e_nu, e_psi, jac

    def metric_upper(self, p):
        """Contravariant metric (3x3 per point) and Jacobian."""
        gm, gn, gp = self.gradients(p)
        basis = np.stack([gm, gn, gp], axis=-2)  # (...,3 coords,3 comps)
        g = np.einsum("...ik,...jk->...ij", basis, basis)
        jac = np.einsum("...i,...i->...", gm, np.cross(gn, gp))
        return g, jac


@dataclass(frozen=True)
class Axisym(SurfaceFamily):
    """Circular-cross-section tori about the z axis."""

    r0: float = 1.0

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")

    def psi(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        return 0.5 * ((r - self.r0) ** 2 + p[..., 2] ** 2)

    def grad_psi(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        out = (r - self.r0)[..., None] * _grad_r(p)
        out[..., 2] += p[..., 2]
        return out

    def poloidal_angle(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        return _wrap_angle(np.arctan2(p[..., 2], r - self.r0))

    def grad_poloidal(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        d2 = (r - self.r0) ** 2 + p[..., 2] ** 2
        out = -(p[..., 2] / d2)[..., None] * _grad_r(p)
        out[..., 2] += (r - self.r0) / d2
        return out

    def invert(self, mu, nu, psi):
        mu, nu, psi = np.broadcast_arrays(*map(np.asarray, (mu, nu, psi)))
        t = np.sqrt(2.0 * np.asarray(psi, float))
        r = self.r0 + t * np.cos(nu)
        if np.any(r <= 0):
            raise InversionError("surface extends across the vertical axis")
        return np.stack([r * np.cos(mu), r * np.sin(mu), t * np.sin(nu)], axis=-1)


@dataclass(frozen=True)
class PhasePerturbed(SurfaceFamily):
    """Axisymmetric tori with a toroidal-phase ripple of the label."""

    r0: float = 1.0
    eps: float = 0.1
    m: int = 1

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if int(self.m) == 0:
            raise ValueError("m must be a nonzero integer")

    def psi(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        _require_off_axis(r)
        phi = np.arctan2(p[..., 1], p[..., 0])
        return 0.5 * ((r - self.r0) ** 2 + p[..., 2] ** 2) + 0.5 * self.eps * np.sin(
            self.m * phi
        )

    def grad_psi(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        phi = np.arctan2(p[..., 1], p[..., 0])
        out = (r - self.r0)[..., None] * _grad_r(p)
        out += (0.5 * self.eps * self.m * np.cos(self.m * phi))[..., None] * grad_phi(p)
        out[..., 2] += p[..., 2]
        return out

    def poloidal_angle(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        return _wrap_angle(np.arctan2(p[..., 2], r - self.r0))

    def grad_poloidal(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        d2 = (r - self.r0) ** 2 + p[..., 2] ** 2
        out = -(p[..., 2] / d2)[..., None] * _grad_r(p)
        out[..., 2] += (r - self.r0) / d2
        return out

    def invert(self, mu, nu, psi):
        mu, nu, psi = np.broadcast_arrays(*map(np.asarray, (mu, nu, psi)))
        t2 = 2.0 * np.asarray(psi, float) - self.eps * np.sin(self.m * np.asarray(mu))
        if np.any(t2 <= 0):
            raise InversionError(
                "level set is not toroidal at the requested angles (t^2 <= 0)"
            )
        t = np.sqrt(t2)
        r = self.r0 + t * np.cos(nu)
        if np.any(r <= 0):
            raise InversionError("surface extends across the vertical axis")
        return np.stack([r * np.cos(mu), r * np.sin(mu), t * np.sin(nu)], axis=-1)


@dataclass(frozen=True)
class DisplacedEllipse(SurfaceFamily):
    """Elliptic cross sections with a vertical axis displacement.

    psi = (r-r0)^2/2 + E (z-h)^2/2 with h = eps * z * sin(m*phi).  The closed
    forms for the metric and the inverse map are exact for this family.
    """

    r0: float = 1.0
    ellipticity: float = 1.0
    eps: float = 0.0
    m: int = 1

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if self.ellipticity <= 0:
            raise ValueError("ellipticity must be positive")
        if int(self.m) == 0:
            raise ValueError("m must be a nonzero integer")

    # h and its partials; beta = 1 - eps*sin(m*phi) shows up in both.
    def _beta(self, phi):
        return 1.0 - self.eps * np.sin(self.m * phi)

    def psi(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        _require_off_axis(r)
        phi = np.arctan2(p[..., 1], p[..., 0])
        zb = p[..., 2] * self._beta(phi)
        return 0.5 * (r - self.r0) ** 2 + 0.5 * self.ellipticity * zb**2

    def grad_psi(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        phi = np.arctan2(p[..., 1], p[..., 0])
        z = p[..., 2]
        beta = self._beta(phi)
        h_phi = self.eps * z * self.m * np.cos(self.m * phi)
        zb = z * beta
        out = (r - self.r0)[..., None] * _grad_r(p)
        out += (-self.ellipticity * zb * h_phi)[..., None] * grad_phi(p)
        out[..., 2] += self.ellipticity * zb * beta
        return out

    def poloidal_angle(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        return _wrap_angle(np.arctan2(p[..., 2], r - self.r0))

    def grad_poloidal(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        d2 = (r - self.r0) ** 2 + p[..., 2] ** 2
        out = -(p[..., 2] / d2)[..., None] * _grad_r(p)
        out[..., 2] += (r - self.r0) / d2
        return out

    def invert(self, mu, nu, psi):
        mu, nu, psi = np.broadcast_arrays(*map(np.asarray, (mu, nu, psi)))
        beta = self._beta(np.asarray(mu, float))
        denom = np.cos(nu) ** 2 + self.ellipticity * beta**2 * np.sin(nu) ** 2
        t = np.sqrt(2.0 * np.asarray(psi, float) / denom)
        r = self.r0 + t * np.cos(nu)
        if np.any(r <= 0):
            raise InversionError("surface extends across the vertical axis")
        return np.stack([r * np.cos(mu), r * np.sin(mu), t * np.sin(nu)], axis=-1)

    def metric_upper(self, p):
        # Closed forms; the generic gradient route agrees to rounding and is
        # exercised against this one in the tests.
        p = _pts(p)
        r = cylinder_radius(p)
        _require_off_axis(r)
        phi = np.arctan2(p[..., 1], p[..., 0])
        z = p[..., 2]
        ee = self.ellipticity
        beta = self._beta(phi)
        h_z = self.eps * np.sin(self.m * phi)
        h_phi = self.eps * z * self.m * np.cos(self.m * phi)
        zmh = z * beta
        d2 = (r - self.r0) ** 2 + z**2

        g = np.zeros(p.shape[:-1] + (3, 3))
        g[..., 0, 0] = 1.0 / r**2
        g[..., 1, 1] = 1.0 / d2
        g[..., 0, 2] = g[..., 2, 0] = -ee * zmh * h_phi / r**2
        g[..., 1, 2] = g[..., 2, 1] = (
            (r - self.r0) / d2 * (ee * zmh * (1.0 - h_z) - z)
        )
        g[..., 2, 2] = (r - self.r0) ** 2 + ee**2 * zmh**2 * (
            (1.0 - h_z) ** 2 + h_phi**2 / r**2
        )
        jac = ((r - self.r0) ** 2 + ee * z * (1.0 - h_z) * zmh) / (r * d2)
        return g, jac


@dataclass(frozen=True)
class ExpSheared(SurfaceFamily):
    """Tori swept out by the exponentially sheared radius u = r*exp(-eps*y)."""

    r0: float = 1.0
    eps: float = 0.1

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")

    def _u(self, p):
        p = _pts(p)
        return cylinder_radius(p) * np.exp(-self.eps * p[..., 1])

    def _grad_u(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        _require_off_axis(r)
        fac = np.exp(-self.eps * p[..., 1])
        out = fac[..., None] * _grad_r(p)
        out[..., 1] -= fac * self.eps * r
        return out

    def psi(self, p):
        p = _pts(p)
        u = self._u(p)
        return 0.5 * ((u - self.r0) ** 2 + p[..., 2] ** 2)

    def grad_psi(self, p):
        p = _pts(p)
        u = self._u(p)
        out = (u - self.r0)[..., None] * self._grad_u(p)
        out[..., 2] += p[..., 2]
        return out

    def poloidal_angle(self, p):
        p = _pts(p)
        return _wrap_angle(np.arctan2(p[..., 2], self._u(p) - self.r0))

    def grad_poloidal(self, p):
        p = _pts(p)
        u = self._u(p)
        z = p[..., 2]
        e2 = (u - self.r0) ** 2 + z**2
        out = -(z / e2)[..., None] * self._grad_u(p)
        out[..., 2] += (u - self.r0) / e2
        return out

    def invert(self, mu, nu, psi):
        mu, nu, psi = np.broadcast_arrays(*map(np.asarray, (mu, nu, psi)))
        t = np.sqrt(2.0 * np.asarray(psi, float))
        z = t * np.sin(nu)
        u_target = self.r0 + t * np.cos(nu)
        if np.any(u_target <= 0):
            raise InversionError("surface extends across the vertical axis")
        s = np.sin(mu)

        def f(r):
            return r * np.exp(-self.eps * r * s) - u_target

        def df(r):
            return np.exp(-self.eps * r * s) * (1.0 - self.eps * r * s)

        r = _newton_scalar_field(f, df, u_target, u_target, "ExpSheared.invert")
        return np.stack([r * np.cos(mu), r * np.sin(mu), z], axis=-1)


@dataclass(frozen=True)
class ConjugateHarmonic(SurfaceFamily):
    """Shear built from the conjugate pair P = e^{mx} cos(my), Q = e^{mx} sin(my),
    with the z coordinate rescaled by exp(-eps * sin z) to break reflection
    symmetry about the midplane."""

    r0: float = 1.0
    eps: float = 0.05
    m: int = 1

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if int(self.m) == 0:
            raise ValueError("m must be a nonzero integer")

    def conjugate_pair(self, p):
        """(P, Q) at the point; harmonic conjugates in the (x, y) plane."""
        p = _pts(p)
        ex = np.exp(self.m * p[..., 0])
        return ex * np.cos(self.m * p[..., 1]), ex * np.sin(self.m * p[..., 1])

    def _q_partials(self, p):
        p = _pts(p)
        ex = np.exp(self.m * p[..., 0])
        q_x = self.m * ex * np.sin(self.m * p[..., 1])
        q_y = self.m * ex * np.cos(self.m * p[..., 1])
        return q_x, q_y

    def _u(self, p):
        p = _pts(p)
        _, q = self.conjugate_pair(p)
        return cylinder_radius(p) * np.exp(-self.eps * q)

    def _grad_u(self, p):
        p = _pts(p)
        r = cylinder_radius(p)
        _require_off_axis(r)
        _, q = self.conjugate_pair(p)
        q_x, q_y = self._q_partials(p)
        fac = np.exp(-self.eps * q)
        out = fac[..., None] * _grad_r(p)
        out[..., 0] -= fac * self.eps * r * q_x
        out[..., 1] -= fac * self.eps * r * q_y
        return out

    def _v(self, z):
        return z * np.exp(-self.eps * np.sin(z))

    def _dv(self, z):
        return np.exp(-self.eps * np.sin(z)) * (1.0 - self.eps * z * np.cos(z))

    def psi(self, p):
        p = _pts(p)
        u = self._u(p)
        v = self._v(p[..., 2])
        return 0.5 * ((u - self.r0) ** 2 + v**2)

    def grad_psi(self, p):
        p = _pts(p)
        u = self._u(p)
        z = p[..., 2]
        out = (u - self.r0)[..., None] * self._grad_u(p)
        out[..., 2] += self._v(z) * self._dv(z)
        return out

    def poloidal_angle(self, p):
        p = _pts(p)
        return _wrap_angle(np.arctan2(self._v(p[..., 2]), self._u(p) - self.r0))

    def grad_poloidal(self, p):
        p = _pts(p)
        u = self._u(p)
        v = self._v(p[..., 2])
        e2 = (u - self.r0) ** 2 + v**2
        out = -(v / e2)[..., None] * self._grad_u(p)
        out[..., 2] += (u - self.r0) * self._dv(p[..., 2]) / e2
        return out

    def invert(self, mu, nu, psi):
        mu, nu, psi = np.broadcast_arrays(*map(np.asarray, (mu, nu, psi)))
        t = np.sqrt(2.0 * np.asarray(psi, float))
        v_target = t * np.sin(nu)
        u_target = self.r0 + t * np.cos(nu)
        if np.any(u_target <= 0):
            raise InversionError("surface extends across the vertical axis")

        z = _newton_scalar_field(
            lambda z: self._v(z) - v_target,
            self._dv,
            v_target,
            v_target,
            "ConjugateHarmonic.invert (z)",
        )

        cmu, smu = np.cos(mu), np.sin(mu)

        def f(r):
            pts = np.stack([r * cmu, r * smu, np.zeros_like(r)], axis=-1)
            _, q = self.conjugate_pair(pts)
            return r * np.exp(-self.eps * q) - u_target

        def df(r):
            pts = np.stack([r * cmu, r * smu, np.zeros_like(r)], axis=-1)
            _, q = self.conjugate_pair(pts)
            q_x, q_y = self._q_partials(pts)
            return np.exp(-self.eps * q) * (1.0 - self.eps * r * (q_x * cmu + q_y * smu))

        r = _newton_scalar_field(f, df, u_target, u_target, "ConjugateHarmonic.invert (r)")
        return np.stack([r * cmu, r * smu, z], axis=-1)


# ---------------------------------------------------------------------------
# Metric samples
# ---------------------------------------------------------------------------


@dataclass
class MetricSample:
    """Metric data of the (mu, nu, psi) frame at one or more points."""

    g_upper: np.ndarray  # (...,3,3) contravariant components
    jacobian: np.ndarray  # (...,)
    g_lower: np.ndarray | None = None  # filled by covariant_metric


def psi_value(family: SurfaceFamily, p) -> np.ndarray:
    return family.psi(p)


def grad_psi(family: SurfaceFamily, p) -> np.ndarray:
    return family.grad_psi(p)


def to_cartesian(family: SurfaceFamily, coords: ToroidalCoords) -> np.ndarray:
    return family.to_cartesian(coords)


def toroidal_coords(family: SurfaceFamily, p) -> ToroidalCoords:
    return family.toroidal_coords(p)


def contravariant_metric(family: SurfaceFamily, coords: ToroidalCoords) -> MetricSample:
    """Contravariant metric and Jacobian at the given curvilinear coordinates."""
    p = family.to_cartesian(coords)
    return metric_at_points(family, p)


def metric_at_points(family: SurfaceFamily, p) -> MetricSample:
    g, jac = family.metric_upper(p)
    if np.any(jac <= JACOBIAN_FLOOR):
        raise DegenerateCoordinatesError(
            f"Jacobian at or below {JACOBIAN_FLOOR:g} (min {np.min(jac):.3e})"
        )
    return MetricSample(g_upper=g, jacobian=np.asarray(jac, float))


def covariant_metric(sample: MetricSample) -> MetricSample:
    """Fill the covariant components via the adjugate divided by J^2.

    This is the cofactor form of the inverse; by the identity
    det(g_upper) = J^2 it coincides with the matrix inverse.
    """
    g = sample.g_upper
    adj = np.empty_like(g)
    for i in range(3):
        for j in range(3):
            i1, i2 = [k for k in range(3) if k != i]
            j1, j2 = [k for k in range(3) if k != j]
            minor = g[..., i1, j1] * g[..., i2, j2] - g[..., i1, j2] * g[..., i2, j1]
            adj[..., j, i] = (-1.0) ** (i + j) * minor
    det = sample.jacobian**2
    if np.any(det <= 0):
        raise DegenerateCoordinatesError("singular contravariant metric")
    sample.g_lower = adj / det[..., None, None]
    return sample


@dataclass
class ValidityReport:
    """Numerical check of the frame hypotheses over a label interval."""

    psi_interval: tuple
    n_samples: int
    min_grad_psi: float
    min_jacobian: float
    inversion_failures: int
    ok: bool

    def as_dict(self):
        return {
            "psi_interval": list(self.psi_interval),
            "n_samples": self.n_samples,
            "min_grad_psi": self.min_grad_psi,
            "min_jacobian": self.min_jacobian,
            "inversion_failures": self.inversion_failures,
            "ok": self.ok,
        }


def validity_scan(
    family: SurfaceFamily,
    psi_interval: tuple,
    n_samples: int = 2000,
    grad_floor: float = 1e-10,
) -> ValidityReport:
    """Sample the (mu, nu, psi) box quasi-randomly and report min |grad psi|, min J."""
    from scipy.stats import qmc

    lo, hi = psi_interval
    box = qmc.Halton(d=3, scramble=False).random(n_samples)
    mu = TWO_PI * box[:, 0]
    nu = TWO_PI * box[:, 1]
    psi = lo + (hi - lo) * box[:, 2]

    failures = 0
    try:
        pts = family.invert(mu, nu, psi)
    except InversionError:
        # Retry point by point so partial coverage still yields a report.
        good = []
        for k in range(n_samples):
            try:
                good.append(family.invert(mu[k], nu[k], psi[k]))
            except InversionError:
                failures += 1
        if not good:
            return ValidityReport(
                psi_interval=(lo, hi),
                n_samples=n_samples,
                min_grad_psi=0.0,
                min_jacobian=0.0,
                inversion_failures=failures,
                ok=False,
            )
        pts = np.stack(good)

    gp = family.grad_psi(pts)
    jac = family.jacobian(pts)
    min_grad = float(np.min(np.linalg.norm(gp, axis=-1)))
    min_jac = float(np.min(jac))
    ok = failures == 0 and min_grad > grad_floor and min_jac > JACOBIAN_FLOOR
    return ValidityReport(
        psi_interval=(lo, hi),
        n_samples=n_samples,
        min_grad_psi=min_grad,
        min_jacobian=min_jac,
        inversion_failures=failures,
        ok=ok,
    )


_FAMILY_BUILDERS: dict[str, Callable[..., SurfaceFamily]] = {
    "axisym": Axisym,
    "phase_perturbed": PhasePerturbed,
    "displaced_ellipse": DisplacedEllipse,
    "exp_sheared": ExpSheared,
    "conjugate_harmonic": ConjugateHarmonic,
}


def make_family(variant: str, **params) -> SurfaceFamily:
    try:
        builder = _FAMILY_BUILDERS[variant]
    except KeyError:
        raise ValueError(
            f"unknown surface family {variant!r}; choose from {sorted(_FAMILY_BUILDERS)}"
        ) from None
    return builder(**params)
