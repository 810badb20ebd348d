"""Command-line runner: solve | verify | export | fixtures-list.

Configs are flat INI files with one section per concern; the packaged
fixtures double as regression inputs.  Exit codes: 0 all checks pass,
1 check failure, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from configparser import ConfigParser
from dataclasses import dataclass, field as dc_field
from importlib import resources
from pathlib import Path

import numpy as np

from . import io as tio
from .analytic import (
    EquilibriumExample,
    HarmonicTangentField,
    NonSolenoidalField,
    anisotropic_balance_residual,
    pressure_divergence,
)
from .diagnostics import (
    interior_sample_points,
    isometry_nullspace,
    quasisymmetry_check,
    reflection_defect,
    surface_sample_groups,
)
from .errors import ConfigError, SolverError, ToroFluxError
from .field import (
    FieldStack,
    curl_fd,
    divergence_fd,
    force_term,
    volume_energy,
    wrap_with_f,
)
from .geometry import SurfaceFamily, ToroidalCoords, make_family, validity_scan
from .pde import (
    PeriodicGrid,
    assemble_coefficients,
    assemble_source,
    periodicity_defect,
    solve_dirichlet,
    solve_periodic,
    surface_energy,
    surface_energy_gradient,
)
from .profiles import AngleProfile, ScalarProfile

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_FAMILY_PARAM_NAMES = ("r0", "ellipticity", "eps", "m")
_ANALYTIC_KINDS = ("none", "nonsolenoidal", "harmonic", "conjugate", "equilibrium")

# nullspace dimension of the continuous-isometry detector, by variant
_EXPECTED_NULLSPACE = {
    "axisym": 1,
    "phase_perturbed": 0,
    "displaced_ellipse": 0,
    "exp_sheared": 0,
    "conjugate_harmonic": 0,
}


@dataclass
class RunConfig:
    variant: str
    family_params: dict
    levels: list
    grid_n: int = 64
    harmonic_m: int = 1
    harmonic_n: int = 0
    tol: float = 1e-8
    bc: str = "periodic"
    f_spec: str = "one"
    analytic_kind: str = "none"
    analytic_level: float | None = None
    equilibrium_c: float = 1.0
    g_spec: str = "zero"
    formats: list = dc_field(default_factory=lambda: ["csv"])
    jobs: int = 1
    source: str = "<memory>"

    def __post_init__(self):
        if self.bc not in ("periodic", "dirichlet"):
            raise ConfigError(f"bc must be periodic or dirichlet, got {self.bc!r}")
        if self.analytic_kind not in _ANALYTIC_KINDS:
            raise ConfigError(f"unknown analytic kind {self.analytic_kind!r}")
        if not self.levels:
            raise ConfigError("at least one psi level is required")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("psi levels must be strictly increasing")

    def family(self) -> SurfaceFamily:
        try:
            return make_family(self.variant, **self.family_params)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad surface family: {exc}") from exc

    def grid(self) -> PeriodicGrid:
        try:
            return PeriodicGrid(self.grid_n, self.grid_n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def f_profile(self) -> ScalarProfile:
        return ScalarProfile.parse(self.f_spec)

    def g_profile(self) -> AngleProfile:
        return AngleProfile.parse(self.g_spec)

    def echo(self) -> dict:
        return {
            "source": self.source,
            "surface": {"variant": self.variant, **self.family_params},
            "levels": [float(v) for v in self.levels],
            "grid": self.grid_n,
            "harmonic_numbers": [self.harmonic_m, self.harmonic_n],
            "tol": self.tol,
            "bc": self.bc,
            "f": self.f_spec,
            "analytic": {
                "kind": self.analytic_kind,
                "level": self.analytic_level,
                "C": self.equilibrium_c,
                "g": self.g_spec,
            },
            "formats": self.formats,
            "jobs": self.jobs,
        }


def _parse_levels(text: str) -> list:
    text = text.strip()
    if ":" in text:
        try:
            lo, hi, count = text.split(":")
            return list(np.linspace(float(lo), float(hi), int(count)))
        except ValueError as exc:
            raise ConfigError(f"bad levels range {text!r}: {exc}") from exc
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad levels list {text!r}: {exc}") from exc


def load_config(path) -> RunConfig:
    parser = ConfigParser()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser.read(path)
    return _config_from_parser(parser, source=str(path))


def _config_from_parser(parser: ConfigParser, source: str) -> RunConfig:
    try:
        surface = parser["surface"]
        variant = surface.get("variant")
        params = {}
        for key in _FAMILY_PARAM_NAMES:
            if key in surface and key != "variant":
                params[key] = int(surface[key]) if key == "m" else float(surface[key])
        solve = parser["solve"] if parser.has_section("solve") else {}
        out = parser["output"] if parser.has_section("output") else {}
        ana = parser["analytic"] if parser.has_section("analytic") else {}
        fld = parser["field"] if parser.has_section("field") else {}
        return RunConfig(
            variant=variant,
            family_params=params,
            levels=_parse_levels(solve.get("levels", "0.08")),
            grid_n=int(solve.get("grid", 64)),
            harmonic_m=int(solve.get("harmonic_m", 1)),
            harmonic_n=int(solve.get("harmonic_n", 0)),
            tol=float(solve.get("tol", 1e-8)),
            bc=solve.get("bc", "periodic"),
            f_spec=fld.get("f", "one") if fld else "one",
            analytic_kind=ana.get("kind", "none") if ana else "none",
            analytic_level=float(ana["level"]) if ana and "level" in ana else None,
            equilibrium_c=float(ana.get("C", 1.0)) if ana else 1.0,
            g_spec=ana.get("g", "zero") if ana else "zero",
            formats=[v.strip() for v in out.get("formats", "csv").split(",")],
            jobs=int(solve.get("jobs", 1)),
            source=source,
        )
    except ConfigError:
        raise
    except Exception as exc:  # malformed section/keys
        raise ConfigError(f"malformed config {source}: {exc}") from exc


def fixture_names() -> list:
    base = resources.files("toroflux") / "fixtures"
    return sorted(p.name[: -len(".cfg")] for p in base.iterdir() if p.name.endswith(".cfg"))


def load_fixture(name: str) -> RunConfig:
    base = resources.files("toroflux") / "fixtures"
    candidate = base / f"{name}.cfg"
    if not candidate.is_file():
        raise ConfigError(
            f"unknown fixture {name!r}; available: {', '.join(fixture_names())}"
        )
    parser = ConfigParser()
    parser.read_string(candidate.read_text())
    return _config_from_parser(parser, source=f"fixture:{name}")


def fixture_description(name: str) -> str:
    base = resources.files("toroflux") / "fixtures"
    text = (base / f"{name}.cfg").read_text().splitlines()
    lines = []
    for line in text:
        if line.startswith("#"):
            lines.append(line.lstrip("# "))
        else:
            break
    return " ".join(lines)


# ---------------------------------------------------------------------------
# check bookkeeping
# ---------------------------------------------------------------------------


class CheckSet:
    """Ordered pass/fail checks plus unthresholded measurements."""

    def __init__(self):
        self.checks = {}
        self.measurements = {}

    def add(self, name: str, value: float, threshold: float, op: str = "<"):
        value = float(value)
        passed = {
            "<": value < threshold,
            "<=": value <= threshold,
            ">": value > threshold,
            "==": value == threshold,
        }[op]
        self.checks[name] = {
            "value": value,
            "threshold": threshold,
            "op": op,
            "passed": bool(passed),
        }

    def measure(self, name: str, value):
        self.measurements[name] = value

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def as_dict(self) -> dict:
        return {"checks": self.checks, "measurements": self.measurements}


def _solve_surfaces(config: RunConfig):
    family = config.family()
    grid = config.grid()
    results = []
    for psi in config.levels:
        t0 = time.perf_counter()
        coeffs = assemble_coefficients(family, psi, grid)
        source = assemble_source(coeffs, config.harmonic_m, config.harmonic_n)
        if config.bc == "periodic":
            sol = solve_periodic(
                coeffs, source, tol=config.tol, M=config.harmonic_m, N=config.harmonic_n
            )
        else:
            sol = solve_dirichlet(
                coeffs, source, tol=config.tol, M=config.harmonic_m, N=config.harmonic_n
            )
        results.append(
            {
                "coeffs": coeffs,
                "source": source,
                "solution": sol,
                "seconds": time.perf_counter() - t0,
            }
        )
    return family, grid, results


def _surface_report(entry) -> dict:
    coeffs, source, sol = entry["coeffs"], entry["source"], entry["solution"]
    d_mu, d_nu = periodicity_defect(sol)
    return {
        "psi": coeffs.psi_level,
        "bc": sol.bc,
        "residual_linf": sol.residual_linf,
        "iterations": sol.iterations,
        "source_mean": float(source.values.mean()),
        "rho_linf": float(np.max(np.abs(sol.rho.values))),
        "rho_mean": float(sol.rho.values.mean()),
        "ellipticity": coeffs.ellipticity_certificate(),
        "periodicity_defect": {"d_mu": d_mu, "d_nu": d_nu},
        "surface_energy": surface_energy(coeffs, sol.rho, sol.M, sol.N),
        "seconds": entry["seconds"],
    }


def _stack_metrics(family, stack: FieldStack, seed: int = 1, n_points: int = 500):
    lo, hi = stack.levels[0], stack.levels[-1]
    pad = 0.05 * (hi - lo)
    pts = interior_sample_points(family, (lo + pad, hi - pad), n_points, seed=seed)
    coords = family.toroidal_coords(pts)
    w = stack.w_at(coords)
    curl = stack.curl_at(coords)
    gp = family.grad_psi(pts)
    gp_norm = np.linalg.norm(gp, axis=-1)
    tan_w = np.abs(np.einsum("pi,pi->p", w, gp)) / (
        np.linalg.norm(w, axis=-1) * gp_norm
    )
    tan_c = np.abs(np.einsum("pi,pi->p", curl, gp)) / (
        np.linalg.norm(curl, axis=-1) * gp_norm
    )
    fld = stack.as_field()
    div = divergence_fd(fld, pts[:100], h=1e-3)
    return {
        "tangency_w_max": float(tan_w.max()),
        "tangency_curl_max": float(tan_c.max()),
        "divergence_fd_max": float(np.max(np.abs(div))),
        "volume_energy": volume_energy(stack),
        "n_points": int(n_points),
    }


# ---------------------------------------------------------------------------
# solve command
# ---------------------------------------------------------------------------


def cmd_solve(config: RunConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    family, grid, results = _solve_surfaces(config)

    mu, nu = grid.mesh()
    for k, entry in enumerate(results):
        sol = entry["solution"]
        tio.write_csv(
            out / f"surface_{k:02d}.csv",
            {
                "mu": mu,
                "nu": nu,
                "rho": sol.rho.values,
                "rho_mu": sol.rho_mu(),
                "rho_nu": sol.rho_nu(),
            },
        )

    stack_info = None
    if config.bc == "periodic" and len(results) >= 3:
        stack = FieldStack(family, grid, [e["solution"] for e in results])
        stack_info = _stack_metrics(family, stack)
        if "vtk" in config.formats:
            _write_stack_vtk(out / "field.vtk", family, stack)

    scan = validity_scan(family, (min(config.levels), max(config.levels)), 1000)
    report = {
        "command": "solve",
        "config": config.echo(),
        "surfaces": [_surface_report(e) for e in results],
        "stack": stack_info,
        "validity": scan.as_dict(),
        "timings": {"total_seconds": time.perf_counter() - t_start},
    }
    tio.write_report(out / "report.json", report)
    return report


def _write_stack_vtk(path, family, stack: FieldStack):
    grid = stack.grid
    mu = np.append(grid.nodes()[0], 2 * np.pi)
    nu = np.append(grid.nodes()[1], 2 * np.pi)
    levels = stack.levels
    mu3, nu3, psi3 = np.meshgrid(mu, nu, levels, indexing="ij")
    coords = ToroidalCoords(mu=mu3, nu=nu3, psi=psi3)
    pts = family.invert(coords.mu, coords.nu, coords.psi)
    shape = mu3.shape
    w = stack.w_at(coords).reshape(shape + (3,))
    # curl needs strictly interior psi; clamp the boundary levels inward
    eps = 1e-9 * (levels[-1] - levels[0])
    psi_c = np.clip(psi3, levels[0] + eps, levels[-1] - eps)
    curl = stack.curl_at(ToroidalCoords(mu=mu3, nu=nu3, psi=psi_c)).reshape(shape + (3,))
    tio.write_vtk_structured_grid(
        path, pts.reshape(shape + (3,)), {"w": w, "curl_w": curl}
    )


# ---------------------------------------------------------------------------
# verify command
# ---------------------------------------------------------------------------


def _verify_pde(config: RunConfig, checks: CheckSet):
    family, grid, results = _solve_surfaces(config)
    res_max = max(e["solution"].residual_linf for e in results)
    checks.add("solver_residual", res_max, config.tol, "<=")
    checks.add(
        "source_zero_mean",
        max(abs(float(e["source"].values.mean())) for e in results),
        1e-10,
    )
    checks.add(
        "ellipticity_lambda_min",
        min(e["coeffs"].ellipticity_certificate()["lambda_minus_min"] for e in results),
        0.0,
        ">",
    )
    checks.add(
        "rho_zero_mean",
        max(abs(float(e["solution"].rho.values.mean())) for e in results),
        1e-12,
    )

    mid = results[len(results) // 2]
    grad = surface_energy_gradient(
        mid["coeffs"], mid["solution"].rho, config.harmonic_m, config.harmonic_n
    )
    checks.add("energy_gradient_norm", float(np.max(np.abs(grad))), 1e-8)

    theta_mean = mid["solution"].theta_mu_mean()
    checks.add(
        "theta_mu_mean_exact",
        abs(theta_mean - 4 * np.pi**2 * config.harmonic_m),
        0.0,
        "==",
    )

    if config.bc == "dirichlet":
        # compare against the periodic solve on the same surface
        psol = solve_periodic(
            mid["coeffs"], mid["source"], tol=config.tol,
            M=config.harmonic_m, N=config.harmonic_n,
        )
        d_mu, _ = periodicity_defect(mid["solution"])
        p_mu, _ = periodicity_defect(psol)
        checks.add("dirichlet_defect_ratio", d_mu / max(p_mu, 1e-12), 10.0, ">")
        checks.measure("dirichlet_defect_mu", d_mu)
        checks.measure("periodic_defect_mu", p_mu)

    if config.bc == "periodic" and len(results) >= 3:
        stack = FieldStack(family, grid, [e["solution"] for e in results])
        metrics = _stack_metrics(family, stack)
        checks.add("tangency_w", metrics["tangency_w_max"], 1e-8)
        checks.add("tangency_curl", metrics["tangency_curl_max"], 1e-6)
        checks.add("divergence_fd", metrics["divergence_fd_max"], 1e-5)
        checks.measure("volume_energy", metrics["volume_energy"])

        # energy stationarity along random zero-mean directions
        coeffs, sol = mid["coeffs"], mid["solution"]
        e0 = surface_energy(coeffs, sol.rho, sol.M, sol.N)
        rng = np.random.default_rng(99)
        lin_max = 0.0
        monotone = True
        from .pde import Field2D

        for _ in range(50):
            delta = rng.standard_normal(grid.shape)
            delta -= delta.mean()
            delta /= np.max(np.abs(delta))
            gaps = []
            for t in (1e-3, 5e-4):
                e_t = surface_energy(coeffs, Field2D(sol.rho.values + t * delta), sol.M, sol.N)
                gaps.append(e_t - e0)
                if e_t < e0:
                    monotone = False
            # gap(t) = a t + c t^2; eliminate the quadratic part
            t1, t2 = 1e-3, 5e-4
            a = (t1**2 * gaps[1] - t2**2 * gaps[0]) / (t1**2 * t2 - t2**2 * t1)
            lin_max = max(lin_max, abs(a))
        checks.add("energy_linear_coefficient", lin_max, 1e-7)
        checks.add("energy_minimum", 0.0 if monotone else 1.0, 0.5)
    return family


def _analytic_points(family, level, n=500, seed=11, band=0.0):
    lo = level - band if band else level
    hi = level + band if band else level
    if lo == hi:
        from scipy.stats import qmc

        box = qmc.Halton(d=2, scramble=True, seed=seed).random(n)
        coords = ToroidalCoords(
            mu=2 * np.pi * box[:, 0], nu=2 * np.pi * box[:, 1], psi=np.full(n, level)
        )
        return family.invert(coords.mu, coords.nu, coords.psi)
    return interior_sample_points(family, (lo, hi), n, seed=seed)


def _parallelism_defect(force, grad):
    nhat = grad / np.linalg.norm(grad, axis=-1)[..., None]
    perp = force - np.einsum("...i,...i->...", force, nhat)[..., None] * nhat
    return float(
        np.max(np.linalg.norm(perp, axis=-1) / np.linalg.norm(force, axis=-1))
    )


def _verify_nonsolenoidal(config: RunConfig, checks: CheckSet):
    params = NonSolenoidalField(
        r0=config.family_params.get("r0", 1.0),
        eps=config.family_params.get("eps", 0.1),
        m=int(config.family_params.get("m", 4)),
        f_spec=config.f_profile(),
    )
    family = params.family
    level = config.analytic_level or config.levels[0]
    pts = _analytic_points(family, level)
    force = force_term(params.w, params.curl_w, pts)
    checks.add("force_parallelism", _parallelism_defect(force, family.grad_psi(pts)), 1e-10)
    div_fd = divergence_fd(params.w, pts, h=1e-4, richardson=True)
    checks.add("div_closed_vs_fd", float(np.max(np.abs(div_fd - params.div_w(pts)))), 1e-10)
    lam = np.einsum("pi,pi->p", force, family.grad_psi(pts)) / np.einsum(
        "pi,pi->p", family.grad_psi(pts), family.grad_psi(pts)
    )
    checks.add(
        "lambda_closed_form",
        float(np.max(np.abs(lam - params.force_coefficient(pts)))),
        1e-8,
    )
    checks.add("div_max_offplane", float(np.max(np.abs(params.div_w(pts)))), 1e-2, ">")
    midplane = family.invert(
        np.linspace(0, 2 * np.pi, 32, endpoint=False), np.zeros(32), np.full(32, level)
    )
    checks.add("div_midplane", float(np.max(np.abs(params.div_w(midplane)))), 1e-10)
    return family


def _verify_harmonic(config: RunConfig, checks: CheckSet):
    family = config.family()
    sol = HarmonicTangentField(family, config.f_profile())
    level = config.analytic_level or config.levels[0]
    pts = _analytic_points(family, level)
    checks.add("xi_tangency", float(np.max(sol.tangency_defect(pts))), 1e-12)
    checks.add(
        "xi_curl_fd",
        float(np.max(np.abs(curl_fd(sol.xi, pts, richardson=True)))),
        1e-7,
    )
    checks.add(
        "xi_div_fd",
        float(np.max(np.abs(divergence_fd(sol.xi, pts, richardson=True)))),
        1e-7,
    )
    force = force_term(sol.w, sol.curl_w, pts)
    checks.add("force_parallelism", _parallelism_defect(force, family.grad_psi(pts)), 1e-8)
    checks.add(
        "closed_vs_fd_force",
        float(
            np.max(
                np.linalg.norm(
                    np.cross(curl_fd(sol.w, pts, richardson=True), sol.w(pts))
                    - sol.force(pts),
                    axis=-1,
                )
            )
        ),
        1e-6,
    )
    checks.add(
        "divergence_fd",
        float(np.max(np.abs(divergence_fd(sol.w, pts, h=1e-4, richardson=True)))),
        1e-7,
    )
    _, _, mismatch = pressure_divergence(family, sol.f_spec, sol.field(), pts[:100])
    checks.add("pressure_mismatch", float(np.max(mismatch)), 1e-6)
    checks.add(
        "anisotropic_balance",
        float(np.max(anisotropic_balance_residual(family, sol.f_spec, sol.field(), pts))),
        1e-6,
    )
    groups = surface_sample_groups(family, [level * 0.8, level], 150)
    qs = quasisymmetry_check(sol.xi, family, sol.f_spec, groups)
    checks.add("qs_div_u", qs.div_u_max, 1e-7)
    checks.measure("quasisymmetry", qs.as_dict())
    return family


def _verify_conjugate(config: RunConfig, checks: CheckSet):
    family = config.family()
    sol = HarmonicTangentField(family, config.f_profile())
    level = config.analytic_level or config.levels[0]
    pts = _analytic_points(family, level, band=0.3 * level)
    checks.measure("xi_tangency_defect", float(np.max(sol.tangency_defect(pts))))
    checks.add(
        "xi_curl_fd", float(np.max(np.abs(curl_fd(sol.xi, pts, richardson=True)))), 1e-7
    )
    checks.add(
        "xi_div_fd",
        float(np.max(np.abs(divergence_fd(sol.xi, pts, richardson=True)))),
        1e-7,
    )

    def p_harmonic(p):
        return family.conjugate_pair(p)[0]

    lap = 0.0
    h = 1e-4
    for i in range(2):
        dp = np.zeros(3)
        dp[i] = h
        lap = lap + (p_harmonic(pts + dp) - 2 * p_harmonic(pts) + p_harmonic(pts - dp)) / h**2
    checks.add("perturbation_laplacian_fd", float(np.max(np.abs(lap))), 1e-7)
    checks.add(
        "reflection_defect_z",
        reflection_defect(family, [0.0, 0.0, 1.0], 0.0, pts),
        1e-12,
        ">",
    )
    return family


def _verify_equilibrium(config: RunConfig, checks: CheckSet):
    ex = EquilibriumExample(
        C=config.equilibrium_c,
        g_spec=config.g_profile(),
        r0=config.family_params.get("r0", 1.0),
    )
    family = ex.family
    level = config.analytic_level or config.levels[0]
    pts = _analytic_points(family, level)
    checks.add(
        "force_balance_residual", float(np.max(ex.force_balance_residual(pts))), 1e-7
    )
    checks.add("divergence_nonzero", float(np.max(np.abs(ex.div_w(pts)))), 1e-2, ">")
    g0 = EquilibriumExample(C=config.equilibrium_c, g_spec=AngleProfile.zero(), r0=ex.r0)
    checks.measure(
        "residual_with_zero_g", float(np.max(g0.force_balance_residual(pts)))
    )
    return family


def cmd_verify(config: RunConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    checks = CheckSet()
    verifier = {
        "none": _verify_pde,
        "nonsolenoidal": _verify_nonsolenoidal,
        "harmonic": _verify_harmonic,
        "conjugate": _verify_conjugate,
        "equilibrium": _verify_equilibrium,
    }[config.analytic_kind]
    family = verifier(config, checks)

    lo, hi = min(config.levels), max(config.levels)
    if lo == hi:
        lo, hi = 0.7 * lo, hi
    pts = interior_sample_points(family, (lo, hi), 500, seed=5)
    report_sym = isometry_nullspace(family, pts)
    checks.add(
        "symmetry_nullspace_dim",
        report_sym.nullspace_dim,
        _EXPECTED_NULLSPACE[config.variant],
        "==",
    )
    checks.measure("symmetry", report_sym.as_dict())
    checks.measure(
        "reflection_defect_zplane",
        reflection_defect(family, [0.0, 0.0, 1.0], 0.0, pts),
    )
    scan = validity_scan(family, (lo, hi), 1000)
    checks.add("validity_scan_ok", 1.0 if scan.ok else 0.0, 0.5, ">")

    report = {
        "command": "verify",
        "config": config.echo(),
        **checks.as_dict(),
        "validity": scan.as_dict(),
        "passed": checks.all_passed,
        "timings": {"total_seconds": time.perf_counter() - t_start},
    }
    tio.write_report(out / "report.json", report)
    return report


# ---------------------------------------------------------------------------
# export command
# ---------------------------------------------------------------------------


def _export_level(config: RunConfig) -> float:
    if config.analytic_level is not None:
        return config.analytic_level
    return config.levels[len(config.levels) // 2]


def _analytic_field(config: RunConfig):
    kind = config.analytic_kind
    if kind == "nonsolenoidal":
        params = NonSolenoidalField(
            r0=config.family_params.get("r0", 1.0),
            eps=config.family_params.get("eps", 0.1),
            m=int(config.family_params.get("m", 4)),
            f_spec=config.f_profile(),
        )
        return params.family, params.field()
    if kind in ("harmonic", "conjugate"):
        sol = HarmonicTangentField(config.family(), config.f_profile())
        return sol.family, sol.field()
    if kind == "equilibrium":
        ex = EquilibriumExample(
            C=config.equilibrium_c,
            g_spec=config.g_profile(),
            r0=config.family_params.get("r0", 1.0),
        )
        return ex.family, ex.field()
    raise ConfigError(f"no analytic field for kind {kind!r}")


def cmd_export(config: RunConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    family = config.family()
    grid = config.grid()
    level = _export_level(config)
    mu, nu = grid.mesh()
    mu_c = np.append(grid.nodes()[0], 2 * np.pi)
    nu_c = np.append(grid.nodes()[1], 2 * np.pi)
    mu_g, nu_g = np.meshgrid(mu_c, nu_c, indexing="ij")
    pts_lattice = family.invert(mu_g, nu_g, np.full(mu_g.shape, level))

    written = {"surface_points": str(out / "surface_points.csv")}
    tio.write_csv(
        out / "surface_points.csv",
        {
            "x": pts_lattice[..., 0],
            "y": pts_lattice[..., 1],
            "z": pts_lattice[..., 2],
        },
    )

    field = None
    if config.analytic_kind != "none":
        family, field = _analytic_field(config)
    elif len(config.levels) >= 3 and config.bc == "periodic":
        from .field import build_stack

        stack = build_stack(
            family,
            config.levels,
            grid,
            M=config.harmonic_m,
            N=config.harmonic_n,
            tol=config.tol,
            jobs=config.jobs,
        )
        field = stack.as_field()
        # keep the export level strictly inside the stack
        level = float(np.clip(level, stack.levels[0] + 1e-9, stack.levels[-1] - 1e-9))
        pts_lattice = family.invert(mu_g, nu_g, np.full(mu_g.shape, level))

    if field is not None:
        w = field(pts_lattice)
        curl = field.curl(pts_lattice)
        base = {
            "mu": mu_g,
            "nu": nu_g,
            "x": pts_lattice[..., 0],
            "y": pts_lattice[..., 1],
            "z": pts_lattice[..., 2],
        }
        tio.write_csv(
            out / "w_magnitude.csv",
            {**base, "w_mag": np.linalg.norm(w, axis=-1)},
        )
        tio.write_csv(
            out / "curl_magnitude.csv",
            {**base, "curl_mag": np.linalg.norm(curl, axis=-1)},
        )
        written["w_magnitude"] = str(out / "w_magnitude.csv")
        written["curl_magnitude"] = str(out / "curl_magnitude.csv")

    report = {
        "command": "export",
        "config": config.echo(),
        "level": level,
        "files": written,
    }
    tio.write_report(out / "export.json", report)
    return report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toroflux",
        description="Tangent solenoidal fields on nested toroidal surfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "export"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI config file")
        p.add_argument("--fixture", help="packaged fixture name")
        p.add_argument("--out", type=Path, default=Path("toroflux_out"))
        p.add_argument("--grid", type=int, help="override grid size")
        p.add_argument("--levels", type=int, help="override number of psi levels")
        p.add_argument("--tol", type=float, help="override solver tolerance")
        p.add_argument("--bc", choices=("periodic", "dirichlet"))
    sub.add_parser("fixtures-list")
    return parser


def _resolve_config(args) -> RunConfig:
    if bool(args.config) == bool(args.fixture):
        raise ConfigError("exactly one of --config or --fixture is required")
    config = load_config(args.config) if args.config else load_fixture(args.fixture)
    if args.grid:
        config.grid_n = args.grid
    if args.levels:
        lo, hi = min(config.levels), max(config.levels)
        if args.levels == 1:
            config.levels = [0.5 * (lo + hi)]
        else:
            config.levels = list(np.linspace(lo, hi, args.levels))
    if args.tol:
        config.tol = args.tol
    if args.bc:
        config.bc = args.bc
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "fixtures-list":
        for name in fixture_names():
            print(f"{name}: {fixture_description(name)}")
        return EXIT_OK
    try:
        config = _resolve_config(args)
        if args.command == "solve":
            report = cmd_solve(config, args.out)
            worst = max(s["residual_linf"] for s in report["surfaces"])
            print(f"solved {len(report['surfaces'])} surface(s); worst residual {worst:.3e}")
            print(f"report: {args.out / 'report.json'}")
            return EXIT_OK
        if args.command == "verify":
            report = cmd_verify(config, args.out)
            for name, chk in report["checks"].items():
                state = "PASS" if chk["passed"] else "FAIL"
                print(
                    f"[{state}] {name}: {chk['value']:.3e} {chk['op']} {chk['threshold']:g}"
                )
            print(f"report: {args.out / 'report.json'}")
            return EXIT_OK if report["passed"] else EXIT_CHECK_FAILURE
        report = cmd_export(config, args.out)
        for key, path in report["files"].items():
            print(f"{key}: {path}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ToroFluxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
