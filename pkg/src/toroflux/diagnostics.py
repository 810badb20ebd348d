"""Continuous-isometry, reflection, and quasisymmetry diagnostics.

A rigid Euclidean motion is generated by a + b x x.  A scalar field is
invariant under the motion iff its Lie derivative (a + b x x) . grad vanishes
everywhere, which turns symmetry detection into a nullspace problem: each
sample point contributes the row [grad psi, x x grad psi] of a tall matrix
whose near-null right singular vectors are the surviving generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .field import CartesianVectorField, divergence_fd
from .geometry import SurfaceFamily, ToroidalCoords
from .profiles import ScalarProfile

NULLSPACE_TAU = 1e-6
DEFAULT_SAMPLES = 500


@dataclass(frozen=True)
class IsometryGenerator:
    """Generator a + b x x of a continuous Euclidean isometry."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, float))
        object.__setattr__(self, "b", np.asarray(self.b, float))

    def velocity(self, p) -> np.ndarray:
        p = np.asarray(p, float)
        return self.a + np.cross(self.b, p)

    @property
    def trivial(self) -> bool:
        return float(self.a @ self.a + self.b @ self.b) == 0.0

    @staticmethod
    def rotation_z() -> "IsometryGenerator":
        return IsometryGenerator(a=np.zeros(3), b=np.array([0.0, 0.0, 1.0]))


def lie_scalar(family_or_grad, gen: IsometryGenerator, p):
    """(a + b x x) . grad(psi); zero for invariant scalars."""
    p = np.asarray(p, float)
    grad = (
        family_or_grad.grad_psi(p)
        if isinstance(family_or_grad, SurfaceFamily)
        else family_or_grad(p)
    )
    return np.einsum("...i,...i->...", gen.velocity(p), grad)


@dataclass
class SymmetryReport:
    """SVD spectrum of the sampled Lie-derivative matrix."""

    singular_values: np.ndarray
    nullspace_dim: int
    generators: list = field(default_factory=list)
    tau: float = NULLSPACE_TAU
    n_samples: int = 0

    def as_dict(self):
        return {
            "singular_values": [float(s) for s in self.singular_values],
            "nullspace_dim": self.nullspace_dim,
            "generators": [
                {"a": list(map(float, g.a)), "b": list(map(float, g.b))}
                for g in self.generators
            ],
            "tau": self.tau,
            "n_samples": self.n_samples,
            "sigma_ratio": float(self.singular_values[-1] / self.singular_values[0]),
        }


def isometry_nullspace(
    grad_eval, sample_points, tau: float = NULLSPACE_TAU
) -> SymmetryReport:
    """Detect continuous isometries of a scalar field from gradient samples.

    grad_eval: SurfaceFamily or callable p -> grad psi.
    Rows [grad, p x grad]; singular values below tau * sigma_max count as null.
    """
    pts = np.asarray(sample_points, float)
    if pts.shape[0] < 6:
        raise ValueError("need at least 6 sample points for a 6-column system")
    grad = (
        grad_eval.grad_psi(pts)
        if isinstance(grad_eval, SurfaceFamily)
        else grad_eval(pts)
    )
    rows = np.concatenate([grad, np.cross(pts, grad)], axis=-1)
    _, sigma, vh = np.linalg.svd(rows, full_matrices=False)
    if sigma[0] == 0.0:
        raise ValueError("degenerate samples: all gradients vanish")
    null = sigma < tau * sigma[0]
    generators = [
        IsometryGenerator(a=vh[k, :3], b=vh[k, 3:]) for k in np.nonzero(null)[0]
    ]
    return SymmetryReport(
        singular_values=sigma,
        nullspace_dim=int(null.sum()),
        generators=generators,
        tau=tau,
        n_samples=pts.shape[0],
    )


def interior_sample_points(
    family: SurfaceFamily,
    psi_interval,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> np.ndarray:
    """Quasi-random (Halton) points between two surfaces of the family."""
    lo, hi = psi_interval
    box = qmc.Halton(d=3, scramble=seed != 0, seed=seed or None).random(n_samples)
    coords = ToroidalCoords(
        mu=2 * np.pi * box[:, 0],
        nu=2 * np.pi * box[:, 1],
        psi=lo + (hi - lo) * box[:, 2],
    )
    return family.invert(coords.mu, coords.nu, coords.psi)


def lie_modulus_w2(solution, gen: IsometryGenerator, p):
    """Lie derivative of |w|^2 for w = f(psi) xi, via the log decomposition.

    |w|^2 [ gen . grad log f^2 + gen . grad log |xi|^2 ]; both gradients are
    analytic, so the result is exact up to rounding.
    """
    p = np.asarray(p, float)
    v = gen.velocity(p)
    psi = solution.family.psi(p)
    f = solution.f_spec(psi)
    df = solution.f_spec.derivative(psi)
    grad_log_f2 = (2.0 * df / f)[..., None] * solution.family.grad_psi(p)
    xi2 = solution.xi_sq(p)
    grad_log_xi2 = solution.grad_xi_sq(p) / xi2[..., None]
    w2 = f**2 * xi2
    return w2 * np.einsum(
        "...i,...i->...", v, grad_log_f2 + grad_log_xi2
    )


def reflection_defect(psi_eval, normal, offset: float, sample_points) -> float:
    """max |psi(x) - psi(mirror x)| over the samples; zero iff mirror-symmetric."""
    n = np.asarray(normal, float)
    n = n / np.linalg.norm(n)
    pts = np.asarray(sample_points, float)
    mirrored = pts - 2.0 * (pts @ n - offset)[..., None] * n
    psi = psi_eval.psi if isinstance(psi_eval, SurfaceFamily) else psi_eval
    return float(np.max(np.abs(psi(pts) - psi(mirrored))))


@dataclass
class QuasisymmetryReport:
    """Measured departures from the quasisymmetry conditions for u = xi x grad(psi)."""

    div_u_max: float
    u_grad_w2_max: float
    flux_surface_spread: float
    tangential_max: float

    def as_dict(self):
        return {
            "div_u_max": self.div_u_max,
            "u_grad_w2_max": self.u_grad_w2_max,
            "flux_surface_spread": self.flux_surface_spread,
            "tangential_max": self.tangential_max,
        }


def quasisymmetry_check(
    xi_eval,
    family: SurfaceFamily,
    f_spec: ScalarProfile,
    surface_samples,
    h: float = 1e-4,
) -> QuasisymmetryReport:
    """Diagnose the candidate quasisymmetry u = xi x grad(psi) of w = f(psi) xi.

    surface_samples: list of (psi_level, points) groups, one per surface.
    Reports max |div u| (finite differences), max |u . grad(w^2)|, the spread
    over each surface of (u x w) . grad(psi)/|grad psi|^2 about its surface
    mean (a flux function has zero spread), and max |(u x w) x grad(psi)|.
    """

    def u_eval(p):
        return np.cross(xi_eval(p), family.grad_psi(p))

    def w_eval(p):
        return f_spec(family.psi(p))[..., None] * xi_eval(p)

    def w2_eval(p):
        w = w_eval(p)
        return np.einsum("...i,...i->...", w, w)

    div_u_max = 0.0
    u_grad_w2_max = 0.0
    spread_max = 0.0
    tangential_max = 0.0
    for _, pts in surface_samples:
        pts = np.asarray(pts, float)
        div_u_max = max(
            div_u_max, float(np.max(np.abs(divergence_fd(u_eval, pts, h=h, richardson=True))))
        )
        u = u_eval(pts)
        u_norm = np.linalg.norm(u, axis=-1)
        u_hat = u / np.where(u_norm > 0, u_norm, 1.0)[..., None]
        along = np.einsum(
            "...,...->...",
            u_norm,
            (w2_eval(pts + 0.5 * h * u_hat) - w2_eval(pts - 0.5 * h * u_hat)) / h,
        )
        u_grad_w2_max = max(u_grad_w2_max, float(np.max(np.abs(along))))
        uxw = np.cross(u, w_eval(pts))
        gp = family.grad_psi(pts)
        gp2 = np.einsum("...i,...i->...", gp, gp)
        coeff = np.einsum("...i,...i->...", uxw, gp) / gp2
        spread_max = max(spread_max, float(np.max(np.abs(coeff - coeff.mean()))))
        tangential_max = max(
            tangential_max, float(np.max(np.linalg.norm(np.cross(uxw, gp), axis=-1)))
        )
    return QuasisymmetryReport(
        div_u_max=div_u_max,
        u_grad_w2_max=u_grad_w2_max,
        flux_surface_spread=spread_max,
        tangential_max=tangential_max,
    )


def surface_sample_groups(
    family: SurfaceFamily, psi_levels, n_per_surface: int = 200, seed: int = 3
):
    """(psi, points) groups on each requested surface, quasi-random in angles."""
    groups = []
    box = qmc.Halton(d=2, scramble=True, seed=seed).random(n_per_surface)
    for psi in psi_levels:
        coords = ToroidalCoords(
            mu=2 * np.pi * box[:, 0],
            nu=2 * np.pi * box[:, 1],
            psi=np.full(n_per_surface, psi),
        )
        groups.append((float(psi), family.invert(coords.mu, coords.nu, coords.psi)))
    return groups
