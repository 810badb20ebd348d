import numpy as np
import pytest

from toroflux.errors import EllipticityError, SolverError
from toroflux.geometry import Axisym, DisplacedEllipse
from toroflux.pde import (
    EllipticCoefficients,
    Field2D,
    PeriodicGrid,
    apply_operator,
    assemble_coefficients,
    assemble_source,
    fd_reference_solution,
    periodicity_defect,
    solve_dirichlet,
    solve_periodic,
    solve_periodic_fd,
    surface_energy,
    surface_energy_gradient,
)

AXISYM = Axisym(r0=1.0)
FIG3A = DisplacedEllipse(r0=1.0, ellipticity=1.6, eps=0.03, m=1)
FIG3B = DisplacedEllipse(r0=1.0, ellipticity=1.6, eps=0.3, m=2)


@pytest.fixture(scope="module")
def fig3b_64():
    grid = PeriodicGrid(64, 64)
    coeffs = assemble_coefficients(FIG3B, 0.08, grid)
    source = assemble_source(coeffs)
    solution = solve_periodic(coeffs, source, tol=1e-8)
    return coeffs, source, solution


@pytest.fixture(scope="module")
def axisym_32():
    grid = PeriodicGrid(32, 32)
    coeffs = assemble_coefficients(AXISYM, 0.08, grid)
    source = assemble_source(coeffs)
    return coeffs, source


# ---------------------------------------------------------------------------
# grid / field types
# ---------------------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(ValueError):
        PeriodicGrid(6, 32)
    with pytest.raises(ValueError):
        PeriodicGrid(33, 32)
    g = PeriodicGrid(16, 32)
    assert g.h_mu == pytest.approx(2 * np.pi / 16)


def test_zero_mean_flag_enforced():
    with pytest.raises(ValueError):
        Field2D(np.ones((8, 8)), zero_mean=True)


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------


def test_axisym_coefficients_orthogonal(axisym_32):
    coeffs, _ = axisym_32
    assert np.max(np.abs(coeffs.a_mn.values)) < 1e-14


def test_fig3b_ellipticity_certificate(fig3b_64):
    coeffs, _, _ = fig3b_64
    cert = coeffs.ellipticity_certificate()
    assert cert["lambda_minus_min"] > 0.0
    assert cert["det_min"] > 0.0
    assert cert["jacobian_min"] > 0.0


def test_det_equals_tangent_cross_norm(fig3b_64):
    # det A = |e_nu x e_mu|^2 nodewise
    coeffs, _, _ = fig3b_64
    grid = coeffs.grid
    mu, nu = grid.mesh()
    pts = FIG3B.invert(mu, nu, np.full(grid.shape, 0.08))
    e_mu, e_nu, _, _ = FIG3B.tangent_basis(pts)
    det = coeffs.g_mumu * coeffs.g_nunu - coeffs.g_munu**2
    cross = np.linalg.norm(np.cross(e_nu, e_mu), axis=-1) ** 2
    np.testing.assert_allclose(det, cross, rtol=1e-10)


def test_coefficients_periodic_wraparound():
    # values at mu = 0 equal the analytic formulas evaluated at mu = 2*pi
    grid = PeriodicGrid(16, 16)
    coeffs = assemble_coefficients(FIG3B, 0.08, grid)
    _, nu = grid.nodes()
    pts_wrap = FIG3B.invert(
        np.full_like(nu, 2 * np.pi), nu, np.full_like(nu, 0.08)
    )
    from toroflux.geometry import covariant_metric, metric_at_points

    sample = covariant_metric(metric_at_points(FIG3B, pts_wrap))
    a_mm_wrap = sample.jacobian * sample.g_lower[..., 1, 1]
    np.testing.assert_allclose(coeffs.a_mm.values[0, :], a_mm_wrap, atol=1e-12)


def test_ellipticity_violation_raises():
    grid = PeriodicGrid(8, 8)
    coeffs = assemble_coefficients(AXISYM, 0.08, grid)
    bad = EllipticCoefficients(
        grid=grid,
        psi_level=0.08,
        jacobian=coeffs.jacobian,
        g_mumu=coeffs.g_mumu,
        g_munu=coeffs.g_mumu,  # forces det <= 0 somewhere
        g_nunu=coeffs.g_mumu * 0.5,
    )
    cert = bad.ellipticity_certificate()
    assert cert["lambda_minus_min"] <= 0.0
    # the assembly path raises on such data; emulate by checking directly
    with pytest.raises(EllipticityError):
        _raise_if_not_elliptic(bad)


def _raise_if_not_elliptic(coeffs):
    if coeffs.ellipticity_certificate()["lambda_minus_min"] <= 0.0:
        raise EllipticityError("strict ellipticity violated")


# ---------------------------------------------------------------------------
# source
# ---------------------------------------------------------------------------


def test_axisym_source_vanishes(axisym_32):
    _, source = axisym_32
    assert np.max(np.abs(source.values)) < 1e-12


def test_fig3a_source_zero_mean():
    grid = PeriodicGrid(64, 64)
    coeffs = assemble_coefficients(FIG3A, 0.16, grid)
    source = assemble_source(coeffs)
    assert abs(source.values.mean()) < 1e-12
    assert np.max(np.abs(source.values)) > 1e-4  # nontrivial drive


def test_source_mn_swap_symmetry():
    # (M,N) = (0,1) equals the (1,0) formula with the angle roles exchanged
    grid = PeriodicGrid(32, 32)
    coeffs = assemble_coefficients(FIG3B, 0.08, grid)
    s01 = assemble_source(coeffs, M=0, N=1)
    swapped = EllipticCoefficients(
        grid=grid,
        psi_level=coeffs.psi_level,
        jacobian=coeffs.jacobian.T.copy(),
        g_mumu=coeffs.g_nunu.T.copy(),
        g_munu=coeffs.g_munu.T.copy(),
        g_nunu=coeffs.g_mumu.T.copy(),
    )
    s10_swapped = assemble_source(swapped, M=1, N=0)
    np.testing.assert_allclose(s01.values, s10_swapped.values.T, atol=1e-12)


# ---------------------------------------------------------------------------
# periodic solve
# ---------------------------------------------------------------------------


def test_axisym_solution_is_zero(axisym_32):
    coeffs, source = axisym_32
    sol = solve_periodic(coeffs, source)
    assert np.max(np.abs(sol.rho.values)) < 1e-10


def test_fig3b_solve(fig3b_64):
    _, _, sol = fig3b_64
    assert sol.residual_linf <= 1e-8
    assert np.max(np.abs(sol.rho.values)) > 1e-3
    assert abs(sol.rho.values.mean()) < 1e-13


def test_solver_reports_history_on_failure(fig3b_64):
    coeffs, source, _ = fig3b_64
    with pytest.raises(SolverError) as err:
        solve_periodic(coeffs, source, tol=1e-8, max_iter=3)
    assert len(err.value.residual_history) > 1


def test_gauge_fixed_by_zero_mean_projection(fig3b_64):
    coeffs, source, sol = fig3b_64
    # the image of a constant under the operator vanishes, so adding it to the
    # source reproduces the same zero-mean solution
    img = apply_operator(coeffs, np.full(coeffs.grid.shape, 3.7))
    assert np.max(np.abs(img)) < 1e-10
    shifted = Field2D(source.values + img)
    sol2 = solve_periodic(coeffs, shifted, tol=1e-10)
    np.testing.assert_allclose(sol2.rho.values, sol.rho.values, atol=1e-7)


def test_spectral_self_convergence_beyond_second_order():
    diffs = []
    solutions = {}
    for n in (32, 64, 128):
        grid = PeriodicGrid(n, n)
        coeffs = assemble_coefficients(FIG3B, 0.08, grid)
        solutions[n] = solve_periodic(coeffs, assemble_source(coeffs), tol=1e-11)
    e_coarse = np.max(np.abs(solutions[32].rho.values - solutions[64].rho.values[::2, ::2]))
    e_fine = np.max(np.abs(solutions[64].rho.values - solutions[128].rho.values[::2, ::2]))
    diffs = (e_coarse, e_fine)
    # second order would give a factor 4; spectral convergence crushes it
    assert e_fine < e_coarse / 4.0
    assert e_fine < 1e-7


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------


def test_fd_single_grid_tracks_spectral():
    grid = PeriodicGrid(32, 32)
    coeffs = assemble_coefficients(FIG3B, 0.08, grid)
    source = assemble_source(coeffs)
    spec = solve_periodic(coeffs, source, tol=1e-11)
    fd = solve_periodic_fd(coeffs, source)
    # bare second-order solve: agreement at the truncation level
    assert np.max(np.abs(fd.values - spec.rho.values)) < 5e-3


def test_fd_richardson_matches_spectral_to_1e6():
    # independent-route check: extrapolated FD (32/64/128 ladder, direct
    # factorizations) against the converged spectral solve, on the 32x32 nodes
    fd_ref = fd_reference_solution(FIG3B, 0.08, PeriodicGrid(32, 32), refinements=2)
    grid = PeriodicGrid(64, 64)
    coeffs = assemble_coefficients(FIG3B, 0.08, grid)
    spec = solve_periodic(coeffs, assemble_source(coeffs), tol=1e-10)
    diff = np.max(np.abs(fd_ref.values - spec.rho.values[::2, ::2]))
    assert diff < 1e-6


# ---------------------------------------------------------------------------
# Dirichlet demonstration
# ---------------------------------------------------------------------------


def test_dirichlet_axisym_zero():
    grid = PeriodicGrid(32, 32)
    coeffs = assemble_coefficients(AXISYM, 0.08, grid)
    sol = solve_dirichlet(coeffs, assemble_source(coeffs))
    assert np.max(np.abs(sol.rho.values)) < 1e-12


def test_dirichlet_fig3a_mu_derivative_jump():
    grid = PeriodicGrid(64, 64)
    coeffs = assemble_coefficients(FIG3A, 0.16, grid)
    source = assemble_source(coeffs)
    dsol = solve_dirichlet(coeffs, source)
    psol = solve_periodic(coeffs, source)
    d_mu, _ = periodicity_defect(dsol)
    p_mu, _ = periodicity_defect(psol)
    assert d_mu > 1e-3  # materially nonzero jump of rho_mu across mu = 0, 2*pi
    assert d_mu > 10.0 * max(p_mu, 1e-12)


def test_dirichlet_fig3b_nu_defect_comparison():
    grid = PeriodicGrid(64, 64)
    coeffs = assemble_coefficients(FIG3B, 0.08, grid)
    source = assemble_source(coeffs)
    _, d_nu = periodicity_defect(solve_dirichlet(coeffs, source))
    _, p_nu = periodicity_defect(solve_periodic(coeffs, source))
    assert d_nu > 10.0 * max(p_nu, 1e-12)


def test_periodic_defect_trivial_cases(fig3b_64):
    _, _, sol = fig3b_64
    d_mu, d_nu = periodicity_defect(sol)
    assert d_mu < 1e-8 and d_nu < 1e-8
    flat = solve_periodic(
        assemble_coefficients(AXISYM, 0.08, PeriodicGrid(16, 16)),
        Field2D(np.zeros((16, 16)), zero_mean=True),
    )
    assert periodicity_defect(flat) == (0.0, 0.0)


# ---------------------------------------------------------------------------
# surface energy
# ---------------------------------------------------------------------------


def test_axisym_energy_constant_term(axisym_32):
    coeffs, _ = axisym_32
    e = surface_energy(coeffs, Field2D(np.zeros(coeffs.grid.shape)))
    expected = 0.5 * (2 * np.pi) ** 2 * float(np.mean(coeffs.a_mm.values))
    assert e == pytest.approx(expected, rel=1e-12)
    assert e > 0.0


def test_energy_minimizer_property(fig3b_64):
    coeffs, _, sol = fig3b_64
    e_star = surface_energy(coeffs, sol.rho)
    rng = np.random.default_rng(2024)
    for _ in range(100):
        delta = rng.standard_normal(coeffs.grid.shape)
        delta -= delta.mean()
        delta *= 1e-2 / np.max(np.abs(delta))
        e_pert = surface_energy(coeffs, Field2D(sol.rho.values + delta))
        assert e_star <= e_pert


def test_energy_quadratic_expansion(fig3b_64):
    coeffs, _, sol = fig3b_64
    e_star = surface_energy(coeffs, sol.rho)
    rng = np.random.default_rng(7)
    delta = rng.standard_normal(coeffs.grid.shape)
    delta -= delta.mean()
    delta /= np.max(np.abs(delta))
    ts = np.array([1e-2, 5e-3, 2.5e-3])
    gaps = np.array(
        [surface_energy(coeffs, Field2D(sol.rho.values + t * delta)) - e_star for t in ts]
    )
    ratios = gaps / ts**2
    # pure quadratic gap: E(rho* + t d) - E(rho*) = c * t^2 up to solver residual
    assert np.max(np.abs(ratios - ratios[0])) < 1e-4 * abs(ratios[0]) + 1e-8


def test_energy_gradient_vanishes_at_solution(fig3b_64):
    coeffs, _, sol = fig3b_64
    grad = surface_energy_gradient(coeffs, sol.rho)
    assert np.max(np.abs(grad)) < 1e-8


def test_doubling_rho_does_not_decrease_energy(fig3b_64):
    coeffs, _, sol = fig3b_64
    e1 = surface_energy(coeffs, sol.rho)
    e2 = surface_energy(coeffs, Field2D(2.0 * sol.rho.values))
    assert e2 >= e1


# ---------------------------------------------------------------------------
# nontriviality
# ---------------------------------------------------------------------------


def test_theta_mu_mean_identity(fig3b_64):
    _, _, sol = fig3b_64
    assert sol.theta_mu_mean() == (2 * np.pi) ** 2 * sol.M
    # the sampled counterpart agrees to rounding
    grid_mean = 4 * np.pi**2 * (sol.M + float(sol.rho_mu().mean()))
    assert grid_mean == pytest.approx((2 * np.pi) ** 2 * sol.M, abs=5e-13)
