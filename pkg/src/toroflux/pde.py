"""Per-surface doubly periodic elliptic solve for the poloidal correction rho.

On each surface the Clebsch angle is Theta = M*mu + N*nu + rho, and rho obeys
the divergence-form equation

    d/dmu[ a_mm rho_mu - a_mn rho_nu ] + d/dnu[ a_nn rho_nu - a_mn rho_mu ]
        = S_{M,N},

with a_mm = J g_nunu, a_mn = J g_munu, a_nn = J g_mumu built from the covariant
surface metric, S the harmonic-drive source, and the zero-mean gauge <rho> = 0.

The production discretization is trigonometric collocation with de-aliased
coefficient products, solved by preconditioned conjugate gradients on the
zero-mean subspace.  A conservative second-order finite-difference
discretization is kept alongside as an independent oracle (dense direct
factorization, optionally Richardson-extrapolated) and for the Dirichlet
demonstration, whose boundary-locked solution loses derivative periodicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import spectral
from .errors import CompatibilityError, EllipticityError, SolverError
from .geometry import SurfaceFamily, ToroidalCoords, covariant_metric, metric_at_points

TWO_PI = 2.0 * math.pi

DEFAULT_TOL = 1e-8
COMPAT_TOL = 1e-10
MAX_CG_ITER = 20000


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform open grid on (0, 2*pi)^2; node 2*pi is the image of node 0."""

    n_mu: int
    n_nu: int

    def __post_init__(self):
        for n, name in ((self.n_mu, "n_mu"), (self.n_nu, "n_nu")):
            if n < 8 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")

    @property
    def h_mu(self) -> float:
        return TWO_PI / self.n_mu

    @property
    def h_nu(self) -> float:
        return TWO_PI / self.n_nu

    def nodes(self):
        return (
            self.h_mu * np.arange(self.n_mu),
            self.h_nu * np.arange(self.n_nu),
        )

    def mesh(self):
        mu, nu = self.nodes()
        return np.meshgrid(mu, nu, indexing="ij")

    @property
    def shape(self):
        return (self.n_mu, self.n_nu)


@dataclass
class Field2D:
    """Scalar samples on a PeriodicGrid, axis 0 = mu, axis 1 = nu."""

    values: np.ndarray
    zero_mean: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("Field2D stores a 2D sample array")
        if self.zero_mean and abs(float(self.values.mean())) >= 1e-12:
            raise ValueError("zero_mean field has |mean| >= 1e-12")

    @property
    def shape(self):
        return self.values.shape


@dataclass
class EllipticCoefficients:
    """Nodewise coefficients of the surface operator plus their metric pieces."""

    grid: PeriodicGrid
    psi_level: float
    jacobian: np.ndarray
    g_mumu: np.ndarray
    g_munu: np.ndarray
    g_nunu: np.ndarray

    @property
    def a_mm(self) -> Field2D:
        return Field2D(self.jacobian * self.g_nunu)

    @property
    def a_mn(self) -> Field2D:
        return Field2D(self.jacobian * self.g_munu)

    @property
    def a_nn(self) -> Field2D:
        return Field2D(self.jacobian * self.g_mumu)

    def ellipticity_certificate(self) -> dict:
        """Pointwise spectral bounds of A = [[g_nunu, -g_munu], [-g_munu, g_mumu]]."""
        tr = self.g_mumu + self.g_nunu
        det = self.g_mumu * self.g_nunu - self.g_munu**2
        disc = np.sqrt(np.maximum(tr**2 - 4.0 * det, 0.0))
        lam_minus = 0.5 * (tr - disc)
        lam_plus = 0.5 * (tr + disc)
        return {
            "lambda_minus_min": float(lam_minus.min()),
            "lambda_plus_max": float(lam_plus.max()),
            "det_min": float(det.min()),
            "jacobian_min": float(self.jacobian.min()),
        }


@dataclass
class SurfaceSolution:
    """Zero-mean correction rho on one surface, Theta = M*mu + N*nu + rho."""

    psi_level: float
    M: int
    N: int
    rho: Field2D
    residual_linf: float
    bc: str = "periodic"
    iterations: int = 0
    residual_history: list = field(default_factory=list)

    def rho_mu(self) -> np.ndarray:
        if self.bc == "periodic":
            return spectral.deriv_mu(self.rho.values)
        closed = spectral.wrap_closed(self.rho.values)
        return _fd_deriv_closed(closed, axis=0, h=TWO_PI / self.rho.shape[0])[:-1, :-1]

    def rho_nu(self) -> np.ndarray:
        if self.bc == "periodic":
            return spectral.deriv_nu(self.rho.values)
        closed = spectral.wrap_closed(self.rho.values)
        return _fd_deriv_closed(closed, axis=1, h=TWO_PI / self.rho.shape[1])[:-1, :-1]

    def theta_mu_mean(self) -> float:
        """<Theta_mu> over the cell; exact spectral identity 4*pi^2*M.

        The derivative kills the zero mode, so the mean of rho_mu vanishes
        identically in the trigonometric representation.
        """
        return TWO_PI**2 * self.M


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def assemble_coefficients(
    family: SurfaceFamily, psi_level: float, grid: PeriodicGrid
) -> EllipticCoefficients:
    """Sample J and the covariant surface metric on the grid nodes."""
    mu, nu = grid.mesh()
    pts = family.invert(mu, nu, np.full(grid.shape, psi_level))
    sample = covariant_metric(metric_at_points(family, pts))
    gl = sample.g_lower
    coeffs = EllipticCoefficients(
        grid=grid,
        psi_level=float(psi_level),
        jacobian=np.ascontiguousarray(sample.jacobian),
        g_mumu=np.ascontiguousarray(gl[..., 0, 0]),
        g_munu=np.ascontiguousarray(gl[..., 0, 1]),
        g_nunu=np.ascontiguousarray(gl[..., 1, 1]),
    )
    cert = coeffs.ellipticity_certificate()
    if cert["lambda_minus_min"] <= 0.0 or cert["jacobian_min"] <= 0.0:
        tr = coeffs.g_mumu + coeffs.g_nunu
        det = coeffs.g_mumu * coeffs.g_nunu - coeffs.g_munu**2
        lam = 0.5 * (tr - np.sqrt(np.maximum(tr**2 - 4 * det, 0.0)))
        i, j = np.unravel_index(int(np.argmin(lam)), lam.shape)
        raise EllipticityError(
            f"strict ellipticity violated at node (i={i}, j={j}), "
            f"mu={mu[i, j]:.4f}, nu={nu[i, j]:.4f}: lambda_min={lam[i, j]:.3e}, "
            f"J={coeffs.jacobian[i, j]:.3e}"
        )
    return coeffs


def assemble_source(coeffs: EllipticCoefficients, M: int = 1, N: int = 0) -> Field2D:
    """Drive produced by the secular part M*mu + N*nu of the Clebsch angle."""
    a_mm = coeffs.a_mm.values
    a_mn = coeffs.a_mn.values
    a_nn = coeffs.a_nn.values
    s = -(
        spectral.deriv_mu(a_mm * M - a_mn * N) + spectral.deriv_nu(a_nn * N - a_mn * M)
    )
    mean = float(s.mean())
    if abs(mean) > COMPAT_TOL:
        raise CompatibilityError(
            f"source mean {mean:.3e} exceeds {COMPAT_TOL:g}; inputs are not periodic"
        )
    s = s - mean
    return Field2D(s, zero_mean=True)


# ---------------------------------------------------------------------------
# spectral operator and CG solve
# ---------------------------------------------------------------------------


def apply_operator(coeffs: EllipticCoefficients, rho: np.ndarray) -> np.ndarray:
    """Divergence-form operator with de-aliased coefficient products."""
    a_mm = coeffs.a_mm.values
    a_mn = coeffs.a_mn.values
    a_nn = coeffs.a_nn.values
    rmu = spectral.deriv_mu(rho)
    rnu = spectral.deriv_nu(rho)
    flux_mu = spectral.dealiased_product(a_mm, rmu) - spectral.dealiased_product(a_mn, rnu)
    flux_nu = spectral.dealiased_product(a_nn, rnu) - spectral.dealiased_product(a_mn, rmu)
    return spectral.deriv_mu(flux_mu) + spectral.deriv_nu(flux_nu)


def _precondition_factory(coeffs: EllipticCoefficients):
    n0, n1 = coeffs.grid.shape
    km = spectral.wavenumbers(n0)
    kn = spectral.wavenumbers(n1)
    c_m = float(coeffs.a_mm.values.mean())
    c_n = float(coeffs.a_nn.values.mean())
    sym = c_m * km[:, None] ** 2 + c_n * kn[None, :] ** 2
    sym[0, 0] = 1.0  # zero mode is projected out separately

    def apply(r: np.ndarray) -> np.ndarray:
        rh = np.fft.fft2(r) / sym
        rh[0, 0] = 0.0
        return np.fft.ifft2(rh).real

    return apply


def solve_periodic(
    coeffs: EllipticCoefficients,
    source: Field2D,
    tol: float = DEFAULT_TOL,
    M: int = 1,
    N: int = 0,
    max_iter: int = MAX_CG_ITER,
) -> SurfaceSolution:
    """Preconditioned CG on the zero-mean subspace; residual measured in L-inf.

    The operator is symmetric negative definite there, so CG runs on -L with
    the constant-coefficient inverse Laplacian as spectral preconditioner.
    """
    s = source.values
    s_norm = float(np.max(np.abs(s)))
    if s_norm < 1e-13:
        # drive is zero to rounding; uniqueness gives rho = 0
        return SurfaceSolution(
            psi_level=coeffs.psi_level,
            M=M,
            N=N,
            rho=Field2D(np.zeros_like(s), zero_mean=True),
            residual_linf=s_norm,
            iterations=0,
            residual_history=[s_norm],
        )
    target = tol * s_norm

    def project(v):
        return v - v.mean()

    def a_op(v):
        return project(-apply_operator(coeffs, v))

    b = project(-s)
    x = np.zeros_like(b)
    r = b.copy()
    history = [float(np.max(np.abs(r)))]
    if history[-1] <= target:
        return SurfaceSolution(
            psi_level=coeffs.psi_level,
            M=M,
            N=N,
            rho=Field2D(x, zero_mean=True),
            residual_linf=history[-1] / s_norm if s_norm > 0 else history[-1],
            iterations=0,
            residual_history=history,
        )

    precond = _precondition_factory(coeffs)
    z = precond(r)
    p = z.copy()
    rz = float(np.sum(r * z))
    for it in range(1, max_iter + 1):
        ap = a_op(p)
        alpha = rz / float(np.sum(p * ap))
        x += alpha * p
        if it % 50 == 0:
            r = b - a_op(x)  # refresh against roundoff drift
        else:
            r = r - alpha * ap
        res_inf = float(np.max(np.abs(r)))
        history.append(res_inf)
        if res_inf <= target:
            x = project(x)
            rel = res_inf / s_norm if s_norm > 0 else res_inf
            return SurfaceSolution(
                psi_level=coeffs.psi_level,
                M=M,
                N=N,
                rho=Field2D(x, zero_mean=True),
                residual_linf=rel,
                iterations=it,
                residual_history=history,
            )
        z = precond(r)
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not reach tol={tol:g} in {max_iter} iterations "
        f"(last residual {history[-1]:.3e})",
        residual_history=history,
    )


# ---------------------------------------------------------------------------
# finite-difference oracle (periodic) and Dirichlet demonstration
# ---------------------------------------------------------------------------


def _fd_matrix(a, b, c, h_mu, h_nu, periodic: bool):
    """Conservative second-order stencil of d_mu(a u_mu + b u_nu) + d_nu(b u_mu + c u_nu).

    Periodic: all n0*n1 nodes are unknowns.  Dirichlet: arrays are sampled on
    the closed grid (n0+1, n1+1) and the unknowns are the interior nodes.
    """
    if periodic:
        n0, n1 = a.shape

        def wrap(i, n):
            return i % n

        idx = lambda i, j: wrap(i, n0) * n1 + wrap(j, n1)  # noqa: E731
        rows, cols, vals = [], [], []

        def add(r, c_, v):
            rows.append(r)
            cols.append(c_)
            vals.append(v)

        for i in range(n0):
            for j in range(n1):
                p = idx(i, j)
                am = 0.5 * (a[i, j] + a[wrap(i - 1, n0), j]) / h_mu**2
                ap_ = 0.5 * (a[i, j] + a[wrap(i + 1, n0), j]) / h_mu**2
                cm = 0.5 * (c[i, j] + c[i, wrap(j - 1, n1)]) / h_nu**2
                cp = 0.5 * (c[i, j] + c[i, wrap(j + 1, n1)]) / h_nu**2
                add(p, idx(i - 1, j), am)
                add(p, idx(i + 1, j), ap_)
                add(p, idx(i, j - 1), cm)
                add(p, idx(i, j + 1), cp)
                add(p, p, -(am + ap_ + cm + cp))
                # d_mu(b u_nu): centered in both directions
                f = 1.0 / (4.0 * h_mu * h_nu)
                for si in (+1, -1):
                    bi = b[wrap(i + si, n0), j]
                    add(p, idx(i + si, j + 1), si * bi * f)
                    add(p, idx(i + si, j - 1), -si * bi * f)
                # d_nu(b u_mu)
                for sj in (+1, -1):
                    bj = b[i, wrap(j + sj, n1)]
                    add(p, idx(i + 1, j + sj), sj * bj * f)
                    add(p, idx(i - 1, j + sj), -sj * bj * f)
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(n0 * n1, n0 * n1))
        return mat.tocsr()

    n0c, n1c = a.shape  # closed grid sizes (n0+1, n1+1)
    ni, nj = n0c - 2, n1c - 2

    def interior(i, j):
        return (i - 1) * nj + (j - 1)

    rows, cols, vals = [], [], []

    def add(r, c_, v):
        rows.append(r)
        cols.append(c_)
        vals.append(v)

    for i in range(1, n0c - 1):
        for j in range(1, n1c - 1):
            p = interior(i, j)
            am = 0.5 * (a[i, j] + a[i - 1, j]) / h_mu**2
            ap_ = 0.5 * (a[i, j] + a[i + 1, j]) / h_mu**2
            cm = 0.5 * (c[i, j] + c[i, j - 1]) / h_nu**2
            cp = 0.5 * (c[i, j] + c[i, j + 1]) / h_nu**2
            stencil = {}

            def acc(ii, jj, v):
                stencil[(ii, jj)] = stencil.get((ii, jj), 0.0) + v

            acc(i - 1, j, am)
            acc(i + 1, j, ap_)
            acc(i, j - 1, cm)
            acc(i, j + 1, cp)
            acc(i, j, -(am + ap_ + cm + cp))
            f = 1.0 / (4.0 * h_mu * h_nu)
            for si in (+1, -1):
                bi = b[i + si, j]
                acc(i + si, j + 1, si * bi * f)
                acc(i + si, j - 1, -si * bi * f)
            for sj in (+1, -1):
                bj = b[i, j + sj]
                acc(i + 1, j + sj, sj * bj * f)
                acc(i - 1, j + sj, -sj * bj * f)
            for (ii, jj), v in stencil.items():
                if 1 <= ii <= n0c - 2 and 1 <= jj <= n1c - 2:
                    add(p, interior(ii, jj), v)
                # boundary values are zero; their coefficients drop
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(ni * nj, ni * nj))
    return mat.tocsr()


def _fd_coeff_arrays(coeffs: EllipticCoefficients):
    a = coeffs.a_mm.values
    b = -coeffs.a_mn.values
    c = coeffs.a_nn.values
    return a, b, c


def solve_periodic_fd(coeffs: EllipticCoefficients, source: Field2D) -> Field2D:
    """Single-grid dense finite-difference solve, zero-mean gauge pinned.

    Direct factorization of the conservative stencil; one node is pinned to
    remove the constant nullspace and the mean is subtracted afterwards.
    """
    a, b, c = _fd_coeff_arrays(coeffs)
    n0, n1 = a.shape
    mat = _fd_matrix(a, b, c, coeffs.grid.h_mu, coeffs.grid.h_nu, periodic=True)
    rhs = source.values.ravel() - source.values.mean()
    ntot = n0 * n1
    if ntot <= 64 * 64:
        dense = mat.toarray()
        dense[0, :] = 0.0
        dense[0, 0] = 1.0
        rhs = rhs.copy()
        rhs[0] = 0.0
        u = np.linalg.solve(dense, rhs)
    else:
        mat = mat.tolil()
        mat[0, :] = 0.0
        mat[0, 0] = 1.0
        rhs = rhs.copy()
        rhs[0] = 0.0
        u = spla.splu(mat.tocsc()).solve(rhs)
    u = u.reshape(n0, n1)
    return Field2D(u - u.mean(), zero_mean=True)


def fd_reference_solution(
    family: SurfaceFamily,
    psi_level: float,
    base_grid: PeriodicGrid,
    M: int = 1,
    N: int = 0,
    refinements: int = 2,
) -> Field2D:
    """Richardson-extrapolated FD solution restricted to the base grid nodes.

    Solves on base, 2x, ... grids and eliminates the h^2, h^4, ... error terms
    by Neville extrapolation in h^2 at the shared coarse nodes.
    """
    solutions = []
    h2 = []
    for level in range(refinements + 1):
        factor = 2**level
        grid = PeriodicGrid(base_grid.n_mu * factor, base_grid.n_nu * factor)
        coeffs = assemble_coefficients(family, psi_level, grid)
        src = assemble_source(coeffs, M, N)
        u = solve_periodic_fd(coeffs, src).values
        solutions.append(u[::factor, ::factor])
        h2.append(grid.h_mu**2)
    table = list(solutions)
    for k in range(1, len(table)):
        for i in range(len(table) - 1, k - 1, -1):
            table[i] = (h2[i - k] * table[i] - h2[i] * table[i - 1]) / (
                h2[i - k] - h2[i]
            )
    out = table[-1]
    return Field2D(out - out.mean(), zero_mean=True)


def solve_dirichlet(
    coeffs: EllipticCoefficients,
    source: Field2D,
    tol: float = DEFAULT_TOL,
    M: int = 1,
    N: int = 0,
) -> SurfaceSolution:
    """Boundary-value demonstration: rho = 0 on the cell boundary.

    Second-order finite differences on the closed grid, sparse ILU-GMRES.
    Values stay periodic (zero at both boundary images) but the normal
    derivatives at opposite edges genuinely differ.
    """
    a = spectral.wrap_closed(coeffs.a_mm.values)
    b = -spectral.wrap_closed(coeffs.a_mn.values)
    c = spectral.wrap_closed(coeffs.a_nn.values)
    s = spectral.wrap_closed(source.values)
    mat = _fd_matrix(a, b, c, coeffs.grid.h_mu, coeffs.grid.h_nu, periodic=False)
    rhs = s[1:-1, 1:-1].ravel()

    ilu = spla.spilu(mat.tocsc(), drop_tol=1e-6, fill_factor=20)
    pre = spla.LinearOperator(mat.shape, ilu.solve)
    u, info = spla.gmres(mat, rhs, rtol=min(tol, 1e-10), atol=0.0, M=pre, maxiter=2000)
    if info != 0:
        raise SolverError(f"GMRES failed on the Dirichlet demonstration (info={info})")
    res = float(np.max(np.abs(mat @ u - rhs)))
    s_norm = float(np.max(np.abs(rhs)))
    interior = u.reshape(coeffs.grid.n_mu - 1, coeffs.grid.n_nu - 1)
    full = np.zeros(coeffs.grid.shape)
    full[1:, 1:] = interior  # row/col 0 hold the zero boundary values
    return SurfaceSolution(
        psi_level=coeffs.psi_level,
        M=M,
        N=N,
        rho=Field2D(full),
        residual_linf=res / s_norm if s_norm > 0 else res,
        bc="dirichlet",
    )


# ---------------------------------------------------------------------------
# boundary-derivative periodicity defect
# ---------------------------------------------------------------------------


def _fd_deriv_closed(closed: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order derivative on a closed grid: central inside, one-sided at edges."""
    a = np.moveaxis(closed, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    out[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
    out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def periodicity_defect(solution: SurfaceSolution) -> tuple[float, float]:
    """Max mismatch of one-sided boundary derivatives across opposite edges.

    Returns (defect of d/dmu across mu in {0, 2*pi}, same for d/dnu).  For the
    spectral representation the two one-sided derivatives are the same
    trigonometric derivative, so the defect vanishes identically; the
    finite-difference Dirichlet solution uses one-sided stencils.
    """
    if solution.bc == "periodic":
        dmu = spectral.deriv_mu(solution.rho.values)
        dnu = spectral.deriv_nu(solution.rho.values)
        dmu_c = spectral.wrap_closed(dmu)
        dnu_c = spectral.wrap_closed(dnu)
        d_mu = float(np.max(np.abs(dmu_c[0, :] - dmu_c[-1, :])))
        d_nu = float(np.max(np.abs(dnu_c[:, 0] - dnu_c[:, -1])))
        return d_mu, d_nu
    n0, n1 = solution.rho.shape
    closed = spectral.wrap_closed(solution.rho.values)
    dmu = _fd_deriv_closed(closed, axis=0, h=TWO_PI / n0)
    dnu = _fd_deriv_closed(closed, axis=1, h=TWO_PI / n1)
    d_mu = float(np.max(np.abs(dmu[0, :] - dmu[-1, :])))
    d_nu = float(np.max(np.abs(dnu[:, 0] - dnu[:, -1])))
    return d_mu, d_nu


# ---------------------------------------------------------------------------
# surface energy
# ---------------------------------------------------------------------------


def surface_energy(
    coeffs: EllipticCoefficients, rho: Field2D, M: int = 1, N: int = 0
) -> float:
    """Quadratic surface functional whose minimizer solves the periodic problem.

    E = (1/2)<J a_ij Theta_i Theta_j> integrated over the cell, written with
    the secular part expanded so the rho-dependence is explicitly quadratic.
    Trapezoid quadrature on the periodic cell is spectrally accurate; products
    are evaluated on a doubled grid to keep the quadrature alias-free.
    """
    r = rho.values
    rmu = spectral.deriv_mu(r)
    rnu = spectral.deriv_nu(r)
    a_mm = coeffs.a_mm.values
    a_mn = coeffs.a_mn.values
    a_nn = coeffs.a_nn.values
    s = assemble_source(coeffs, M, N).values

    quad = 0.5 * (
        spectral.quadrature_mean(a_mm, rmu, rmu)
        - 2.0 * spectral.quadrature_mean(a_mn, rmu, rnu)
        + spectral.quadrature_mean(a_nn, rnu, rnu)
    )
    lin = spectral.quadrature_mean(r, s)
    const = 0.5 * float(np.mean(M**2 * a_mm - 2.0 * M * N * a_mn + N**2 * a_nn))
    return TWO_PI**2 * (quad + lin + const)


def surface_energy_gradient(
    coeffs: EllipticCoefficients, rho: Field2D, M: int = 1, N: int = 0
) -> np.ndarray:
    """Variational gradient density S - L(rho); vanishes at the solution."""
    s = assemble_source(coeffs, M, N).values
    return s - apply_operator(coeffs, rho.values)
