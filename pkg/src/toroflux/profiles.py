"""Catalog of smooth scalar profiles used to rescale fields.

``ScalarProfile`` models f(psi) wrappers (exponential, polynomial, or a cubic
spline through a table); ``AngleProfile`` models periodic g(phi) factors.
Both are parsed from short config strings so the CLI and the analytic
solutions share one differentiation path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError


@dataclass(frozen=True)
class ScalarProfile:
    """Differentiable profile f(psi) with analytic derivative."""

    kind: str
    fn: Callable
    dfn: Callable
    spec: str

    def __call__(self, psi):
        return self.fn(np.asarray(psi, float))

    def derivative(self, psi):
        return self.dfn(np.asarray(psi, float))

    @staticmethod
    def exp(a: float) -> "ScalarProfile":
        return ScalarProfile(
            kind="exp",
            fn=lambda s: np.exp(a * s),
            dfn=lambda s: a * np.exp(a * s),
            spec=f"exp:{a:g}",
        )

    @staticmethod
    def polynomial(coeffs) -> "ScalarProfile":
        c = np.asarray(coeffs, float)
        dc = c[1:] * np.arange(1, len(c))
        return ScalarProfile(
            kind="poly",
            fn=lambda s: np.polynomial.polynomial.polyval(s, c),
            dfn=lambda s: (
                np.polynomial.polynomial.polyval(s, dc) if len(dc) else np.zeros_like(s)
            ),
            spec="poly:" + ",".join(f"{v:g}" for v in c),
        )

    @staticmethod
    def constant(value: float = 1.0) -> "ScalarProfile":
        return ScalarProfile.polynomial([value])

    @staticmethod
    def from_table(psi_nodes, values) -> "ScalarProfile":
        psi_nodes = np.asarray(psi_nodes, float)
        values = np.asarray(values, float)
        if psi_nodes.size < 4:
            raise ConfigError("spline table needs at least 4 nodes")
        spline = CubicSpline(psi_nodes, values)
        dspline = spline.derivative()
        spec = (
            "table:"
            + ",".join(f"{v:g}" for v in psi_nodes)
            + ";"
            + ",".join(f"{v:g}" for v in values)
        )
        return ScalarProfile(kind="table", fn=spline, dfn=dspline, spec=spec)

    @staticmethod
    def parse(text: str) -> "ScalarProfile":
        text = text.strip()
        if text in ("one", "1"):
            return ScalarProfile.constant(1.0)
        kind, _, arg = text.partition(":")
        try:
            if kind == "exp":
                return ScalarProfile.exp(float(arg))
            if kind == "poly":
                return ScalarProfile.polynomial([float(v) for v in arg.split(",")])
            if kind == "const":
                return ScalarProfile.constant(float(arg))
            if kind == "table":
                nodes, _, vals = arg.partition(";")
                return ScalarProfile.from_table(
                    [float(v) for v in nodes.split(",")],
                    [float(v) for v in vals.split(",")],
                )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad profile spec {text!r}: {exc}") from exc
        raise ConfigError(f"unknown profile kind {kind!r} in {text!r}")


@dataclass(frozen=True)
class AngleProfile:
    """Periodic profile g(phi) with analytic derivative."""

    fn: Callable
    dfn: Callable
    spec: str

    def __call__(self, phi):
        return self.fn(np.asarray(phi, float))

    def derivative(self, phi):
        return self.dfn(np.asarray(phi, float))

    @staticmethod
    def zero() -> "AngleProfile":
        return AngleProfile(fn=np.zeros_like, dfn=np.zeros_like, spec="zero")

    @staticmethod
    def constant(value: float) -> "AngleProfile":
        return AngleProfile(
            fn=lambda s: np.full_like(s, value),
            dfn=np.zeros_like,
            spec=f"const:{value:g}",
        )

    @staticmethod
    def sine(k: int = 1, amplitude: float = 1.0) -> "AngleProfile":
        return AngleProfile(
            fn=lambda s: amplitude * np.sin(k * s),
            dfn=lambda s: amplitude * k * np.cos(k * s),
            spec=f"sin:{k:d},{amplitude:g}",
        )

    @staticmethod
    def cosine(k: int = 1, amplitude: float = 1.0) -> "AngleProfile":
        return AngleProfile(
            fn=lambda s: amplitude * np.cos(k * s),
            dfn=lambda s: -amplitude * k * np.sin(k * s),
            spec=f"cos:{k:d},{amplitude:g}",
        )

    @staticmethod
    def parse(text: str) -> "AngleProfile":
        text = text.strip()
        if text == "zero":
            return AngleProfile.zero()
        kind, _, arg = text.partition(":")
        try:
            if kind == "const":
                return AngleProfile.constant(float(arg))
            if kind in ("sin", "cos"):
                parts = [v for v in arg.split(",") if v] if arg else []
                k = int(parts[0]) if parts else 1
                amp = float(parts[1]) if len(parts) > 1 else 1.0
                return AngleProfile.sine(k, amp) if kind == "sin" else AngleProfile.cosine(k, amp)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad angle profile spec {text!r}: {exc}") from exc
        raise ConfigError(f"unknown angle profile {text!r}")
