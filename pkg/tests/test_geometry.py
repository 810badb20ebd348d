import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toroflux.errors import DegenerateCoordinatesError, DomainError, InversionError
from toroflux.geometry import (
    Axisym,
    ConjugateHarmonic,
    DisplacedEllipse,
    ExpSheared,
    MetricSample,
    PhasePerturbed,
    ToroidalCoords,
    contravariant_metric,
    covariant_metric,
    grad_psi,
    make_family,
    metric_at_points,
    psi_value,
    to_cartesian,
    toroidal_coords,
    validity_scan,
)

ALL_FAMILIES = [
    Axisym(r0=1.0),
    PhasePerturbed(r0=1.0, eps=0.1, m=4),
    DisplacedEllipse(r0=1.0, ellipticity=1.6, eps=0.3, m=2),
    ExpSheared(r0=1.0, eps=0.18),
    ConjugateHarmonic(r0=1.0, eps=0.05, m=1),
]


def psi_window(fam):
    # PhasePerturbed needs 2*psi > eps for the level set to be a torus
    if isinstance(fam, PhasePerturbed):
        return 0.5 * fam.eps + 0.01, 0.5 * fam.eps + 0.07
    return 0.02, 0.1


def random_coords(n, psi_lo=0.02, psi_hi=0.1, seed=42):
    rng = np.random.default_rng(seed)
    return ToroidalCoords(
        mu=rng.uniform(0, 2 * np.pi, n),
        nu=rng.uniform(0, 2 * np.pi, n),
        psi=rng.uniform(psi_lo, psi_hi, n),
    )


def family_coords(fam, n, seed=42):
    lo, hi = psi_window(fam)
    return random_coords(n, psi_lo=lo, psi_hi=hi, seed=seed)


def fd_gradient(f, p, h=1e-5):
    p = np.asarray(p, float)
    out = np.zeros_like(p)
    for i in range(3):
        dp = np.zeros(3)
        dp[i] = h
        out[..., i] = (f(p + dp) - f(p - dp)) / (2 * h)
    return out


# ---------------------------------------------------------------------------
# psi_value
# ---------------------------------------------------------------------------


def test_axisym_psi_reference_point():
    assert psi_value(Axisym(r0=1.0), [1.5, 0.0, 0.0]) == pytest.approx(0.125, abs=1e-15)


def test_phase_perturbed_psi_vanishing_ripple():
    fam = PhasePerturbed(r0=1.0, eps=0.1, m=4)
    # sin(4*0) = 0, so the ripple term drops at phi = 0
    assert psi_value(fam, [1.5, 0.0, 0.0]) == pytest.approx(0.125, abs=1e-15)


def test_exp_sheared_level_membership():
    # points generated on the 0.08 level must evaluate back to 0.08
    fam = ExpSheared(r0=1.0, eps=0.18)
    coords = random_coords(64, psi_lo=0.08, psi_hi=0.08)
    pts = to_cartesian(fam, coords)
    assert np.allclose(psi_value(fam, pts), 0.08, atol=1e-11)


def test_psi_domain_error_on_axis():
    with pytest.raises(DomainError):
        psi_value(PhasePerturbed(r0=1.0, eps=0.1, m=4), [0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# grad_psi
# ---------------------------------------------------------------------------


def test_axisym_gradient_reference_points():
    fam = Axisym(r0=1.0)
    np.testing.assert_allclose(grad_psi(fam, [1.5, 0.0, 0.0]), [0.5, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(grad_psi(fam, [1.0, 0.0, 0.3]), [0.0, 0.0, 0.3], atol=1e-15)


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: type(f).__name__)
def test_gradients_match_finite_differences(fam):
    coords = family_coords(fam, 24)
    pts = to_cartesian(fam, coords)
    exact = fam.grad_psi(pts)
    for k in range(pts.shape[0]):
        approx = fd_gradient(fam.psi, pts[k])
        scale = max(1.0, np.linalg.norm(exact[k]))
        np.testing.assert_allclose(exact[k], approx, atol=1e-7 * scale)


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: type(f).__name__)
def test_poloidal_gradient_matches_finite_differences(fam):
    coords = family_coords(fam, 12, seed=7)
    pts = to_cartesian(fam, coords)
    exact = fam.grad_poloidal(pts)
    for k in range(pts.shape[0]):
        # avoid the atan2 branch cut in the FD stencil
        if min(abs(coords.nu[k]), abs(coords.nu[k] - 2 * np.pi)) < 0.05:
            continue
        approx = fd_gradient(fam.poloidal_angle, pts[k])
        scale = max(1.0, np.linalg.norm(exact[k]))
        np.testing.assert_allclose(exact[k], approx, atol=1e-6 * scale)


# ---------------------------------------------------------------------------
# to_cartesian / round trips
# ---------------------------------------------------------------------------


def test_axisym_inverse_reference_point():
    p = to_cartesian(Axisym(r0=1.0), ToroidalCoords(mu=0.0, nu=0.0, psi=0.125))
    np.testing.assert_allclose(p, [1.5, 0.0, 0.0], atol=1e-14)


def test_displaced_ellipse_inverse_closed_form():
    fam = DisplacedEllipse(r0=1.0, ellipticity=1.6, eps=0.3, m=2)
    c = ToroidalCoords(mu=np.pi / 4, nu=np.pi / 2, psi=0.08)
    p = to_cartesian(fam, c)
    z2_expected = 2 * 0.08 / (1.6 * (1 - 0.3 * np.sin(2 * np.pi / 4)) ** 2)
    assert p[2] ** 2 == pytest.approx(z2_expected, rel=1e-13)
    assert abs(psi_value(fam, p) - 0.08) < 1e-12


def test_exp_sheared_newton_round_trip():
    fam = ExpSheared(r0=1.0, eps=0.18)
    coords = random_coords(256, psi_lo=0.08, psi_hi=0.08)
    pts = to_cartesian(fam, coords)
    assert np.max(np.abs(psi_value(fam, pts) - 0.08)) < 1e-10


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: type(f).__name__)
def test_round_trip_all_variants(fam):
    coords = family_coords(fam, 128, seed=3)
    pts = to_cartesian(fam, coords)
    back = toroidal_coords(fam, pts)
    assert np.max(np.abs(back.psi - coords.psi)) < 1e-10
    # compare angles on the circle
    for got, want in ((back.mu, coords.mu), (back.nu, coords.nu)):
        diff = np.angle(np.exp(1j * (got - want)))
        assert np.max(np.abs(diff)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(
    mu=st.floats(0, 2 * np.pi - 1e-9),
    nu=st.floats(0, 2 * np.pi - 1e-9),
    psi=st.floats(0.02, 0.1),
)
def test_round_trip_property_exp_sheared(mu, nu, psi):
    fam = ExpSheared(r0=1.0, eps=0.18)
    p = fam.invert(mu, nu, psi)
    assert abs(fam.psi(p) - psi) < 1e-10


def test_inversion_error_reported():
    # pathological ripple: no torus at most angles
    fam = PhasePerturbed(r0=1.0, eps=10.0, m=4)
    with pytest.raises(InversionError):
        fam.invert(np.pi / 8, 0.3, 0.1)


# ---------------------------------------------------------------------------
# metric
# ---------------------------------------------------------------------------


def test_axisym_limit_metric_values():
    fam = DisplacedEllipse(r0=1.0, ellipticity=1.0, eps=0.0, m=1)
    c = ToroidalCoords(mu=0.3, nu=0.0, psi=0.125)  # r = 1.5 on this ray
    sample = contravariant_metric(fam, c)
    g = sample.g_upper
    assert g[0, 0] == pytest.approx(1 / 2.25, rel=1e-13)
    assert g[0, 1] == pytest.approx(0.0, abs=1e-14)
    assert sample.jacobian == pytest.approx(1 / 1.5, rel=1e-13)


def test_axisym_covariant_values():
    fam = DisplacedEllipse(r0=1.0, ellipticity=1.0, eps=0.0, m=1)
    c = ToroidalCoords(mu=0.3, nu=0.0, psi=0.125)  # r = 1.5, d = 0.5
    sample = covariant_metric(contravariant_metric(fam, c))
    gl = sample.g_lower
    assert gl[0, 0] == pytest.approx(2.25, rel=1e-12)
    assert gl[1, 1] == pytest.approx(0.25, rel=1e-12)
    assert gl[0, 1] == pytest.approx(0.0, abs=1e-13)


def test_covariant_of_identity_is_identity():
    sample = MetricSample(g_upper=np.eye(3), jacobian=np.array(1.0))
    covariant_metric(sample)
    np.testing.assert_allclose(sample.g_lower, np.eye(3), atol=1e-15)


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: type(f).__name__)
def test_metric_duality_and_jacobian_identity(fam):
    coords = family_coords(fam, 64, seed=11)
    pts = to_cartesian(fam, coords)
    sample = covariant_metric(metric_at_points(fam, pts))
    prod = np.einsum("...ij,...jk->...ik", sample.g_lower, sample.g_upper)
    eye = np.broadcast_to(np.eye(3), prod.shape)
    assert np.max(np.abs(prod - eye)) < 1e-10
    det = np.linalg.det(sample.g_upper)
    assert np.max(np.abs(sample.jacobian**2 - det) / np.abs(det)) < 1e-10


def test_displaced_ellipse_closed_form_matches_generic():
    fam = DisplacedEllipse(r0=1.0, ellipticity=1.6, eps=0.03, m=1)
    coords = random_coords(32, psi_lo=0.05, psi_hi=0.16)
    pts = to_cartesian(fam, coords)
    g_closed, j_closed = fam.metric_upper(pts)
    g_generic, j_generic = SurfaceFamilyGeneric.metric_upper(fam, pts)
    assert np.max(np.abs(g_closed - g_generic)) < 1e-10
    assert np.max(np.abs(j_closed - j_generic)) < 1e-12


# generic base-class route, used as an independent oracle above
from toroflux.geometry import SurfaceFamily as SurfaceFamilyGeneric  # noqa: E402


def test_metric_matches_fd_constructed_gradients():
    fam = DisplacedEllipse(r0=1.0, ellipticity=1.6, eps=0.03, m=1)
    coords = random_coords(8, psi_lo=0.05, psi_hi=0.16)
    pts = to_cartesian(fam, coords)
    g, jac = fam.metric_upper(pts)
    for k in range(pts.shape[0]):
        if min(abs(coords.nu[k]), abs(coords.nu[k] - 2 * np.pi)) < 0.05:
            continue
        gm = fd_gradient(lambda q: np.arctan2(q[..., 1], q[..., 0]), pts[k])
        gn = fd_gradient(fam.poloidal_angle, pts[k])
        gp = fd_gradient(fam.psi, pts[k])
        basis = np.stack([gm, gn, gp])
        g_fd = basis @ basis.T
        np.testing.assert_allclose(g[k], g_fd, atol=1e-8 * max(1.0, np.max(np.abs(g[k]))))
        assert jac[k] == pytest.approx(gm @ np.cross(gn, gp), abs=1e-8)


def test_tangent_basis_matches_fd_of_inverse_map():
    fam = DisplacedEllipse(r0=1.0, ellipticity=1.6, eps=0.3, m=2)
    coords = random_coords(8, psi_lo=0.05, psi_hi=0.1)
    pts = to_cartesian(fam, coords)
    e_mu, e_nu, e_psi, _ = fam.tangent_basis(pts)
    h = 1e-6
    for k in range(pts.shape[0]):
        mu, nu, psi = coords.mu[k], coords.nu[k], coords.psi[k]
        fd_mu = (fam.invert(mu + h, nu, psi) - fam.invert(mu - h, nu, psi)) / (2 * h)
        fd_nu = (fam.invert(mu, nu + h, psi) - fam.invert(mu, nu - h, psi)) / (2 * h)
        fd_psi = (fam.invert(mu, nu, psi + h) - fam.invert(mu, nu, psi - h)) / (2 * h)
        np.testing.assert_allclose(e_mu[k], fd_mu, atol=2e-8)
        np.testing.assert_allclose(e_nu[k], fd_nu, atol=2e-8)
        np.testing.assert_allclose(e_psi[k], fd_psi, atol=2e-7)


def test_degenerate_jacobian_raises():
    with pytest.raises(DegenerateCoordinatesError):
        covariant_metric(MetricSample(g_upper=np.zeros((3, 3)), jacobian=np.array(0.0)))


# ---------------------------------------------------------------------------
# validity_scan
# ---------------------------------------------------------------------------


def test_validity_scan_axisym():
    rep = validity_scan(Axisym(r0=1.0), (0.02, 0.2), n_samples=500)
    assert rep.ok
    # min J ~ 1/r_max > 0
    assert rep.min_jacobian > 0.5
    assert rep.min_grad_psi > 0.1


def test_validity_scan_exp_sheared():
    rep = validity_scan(ExpSheared(r0=1.0, eps=0.18), (0.02, 0.08), n_samples=500)
    assert rep.ok
    assert rep.min_jacobian > 0.0
    assert rep.min_grad_psi > 0.0


def test_validity_scan_flags_pathological_ripple():
    rep = validity_scan(PhasePerturbed(r0=1.0, eps=10.0, m=4), (0.02, 0.2), n_samples=300)
    assert not rep.ok
    assert rep.inversion_failures > 0


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def test_make_family_dispatch():
    fam = make_family("displaced_ellipse", r0=1.0, ellipticity=1.6, eps=0.3, m=2)
    assert isinstance(fam, DisplacedEllipse)
    with pytest.raises(ValueError):
        make_family("nope")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"variant": "axisym", "r0": -1.0},
        {"variant": "displaced_ellipse", "r0": 1.0, "ellipticity": -2.0},
        {"variant": "phase_perturbed", "r0": 1.0, "eps": 0.1, "m": 0},
    ],
)
def test_parameter_validation(kwargs):
    variant = kwargs.pop("variant")
    with pytest.raises(ValueError):
        make_family(variant, **kwargs)
