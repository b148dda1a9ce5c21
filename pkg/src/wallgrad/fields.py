"""Analytic solution fields sampled at cell centroids, wall boundary values,
and the flat-plate laminar boundary-layer similarity profile.

These stand in for a flow solver: every field provides exact point values at
centroids and an exact wall-normal derivative for error measurement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import WallgradError
from .mesh import TriMesh


def _err(code: str, detail: str) -> WallgradError:
    return WallgradError("fields", code, detail)


@dataclass(frozen=True)
class FlowParams:
    """Free-stream parameters under speed-of-sound nondimensionalization.

    ``mu_wall`` is the nondimensional wall viscosity; when omitted it defaults
    to mach/reynolds, which makes the flat-plate friction coefficient reduce
    to the classical 0.664/sqrt(Re_x).
    """

    mach: float = 0.15
    reynolds: float = 1.0e6
    mu_wall: float | None = None

    def __post_init__(self):
        if self.mach <= 0 or self.reynolds <= 0:
            raise _err("bad-params", f"mach and reynolds must be positive, got {self}")
        if self.mu_wall is None:
            object.__setattr__(self, "mu_wall", self.mach / self.reynolds)
        elif self.mu_wall <= 0:
            raise _err("bad-params", f"mu_wall must be positive, got {self.mu_wall}")


@dataclass
class CellField:
    """Named scalar components, one value per cell, tied to one mesh."""

    mesh: TriMesh
    names: tuple[str, ...]
    values: np.ndarray  # (n_cells, n_components)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_cells, len(self.names)):
            raise _err("bad-field",
                       f"values shape {self.values.shape} does not match "
                       f"{self.mesh.n_cells} cells x {len(self.names)} components")

    def component(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise _err("unknown-component", f"field has no component {name!r}") from None


@dataclass(frozen=True)
class WallBC:
    """Boundary values as functions of wall position, one per component."""

    components: dict[str, Callable[[float, float], float]]

    def value(self, name: str, point) -> float:
        fn = self.components.get(name)
        if fn is None:
            raise _err("missing-bc-component", f"no boundary value for component {name!r}")
        return float(fn(float(point[0]), float(point[1])))


def no_slip(names: tuple[str, ...] = ("u", "v")) -> WallBC:
    """Zero boundary value for every listed component."""
    return WallBC({n: (lambda x, y: 0.0) for n in names})


@dataclass(frozen=True)
class Polynomial2D:
    """Bivariate polynomial of total degree <= 2, graded-lex coefficients."""

    c00: float = 0.0
    c10: float = 0.0
    c01: float = 0.0
    c20: float = 0.0
    c11: float = 0.0
    c02: float = 0.0

    def value(self, x, y):
        return (self.c00 + self.c10 * x + self.c01 * y
                + self.c20 * x * x + self.c11 * x * y + self.c02 * y * y)

    def gradient(self, x, y) -> np.ndarray:
        return np.array([self.c10 + 2.0 * self.c20 * x + self.c11 * y,
                         self.c01 + self.c11 * x + 2.0 * self.c02 * y])

    def shifted(self, dx: float, dy: float) -> "Polynomial2D":
        """Polynomial q with q(x, y) = p(x - dx, y - dy)."""
        return Polynomial2D(
            c00=self.value(-dx, -dy) + 0.0,
            c10=self.c10 - 2.0 * self.c20 * dx - self.c11 * dy,
            c01=self.c01 - self.c11 * dx - 2.0 * self.c02 * dy,
            c20=self.c20, c11=self.c11, c02=self.c02)

    @classmethod
    def from_coeffs(cls, mapping) -> "Polynomial2D":
        known = {"c00", "c10", "c01", "c20", "c11", "c02"}
        bad = set(mapping) - known
        if bad:
            raise _err("bad-coefficients", f"unknown coefficient name(s) {sorted(bad)}")
        return cls(**{k: float(v) for k, v in mapping.items()})


# -- similarity profile ------------------------------------------------------


@dataclass
class BlasiusTable:
    """Dense samples of the flat-plate similarity profile (eta, f, f', f'')."""

    eta: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    wall_shear_const: float = field(init=False)

    def __post_init__(self):
        self.wall_shear_const = float(self.fpp[0])
        self._f_spline = CubicSpline(self.eta, self.f)
        self._fp_spline = CubicSpline(self.eta, self.fp)

    @property
    def eta_max(self) -> float:
        return float(self.eta[-1])

    def f_of(self, eta):
        """Stream-function profile; linear continuation past the table end."""
        eta = np.asarray(eta, dtype=float)
        out = self._f_spline(np.clip(eta, 0.0, self.eta_max))
        beyond = eta > self.eta_max
        if np.any(beyond):
            out = np.where(beyond, self.f[-1] + (eta - self.eta_max), out)
        return out

    def fp_of(self, eta):
        """Velocity-ratio profile; 1 past the table end."""
        eta = np.asarray(eta, dtype=float)
        out = self._fp_spline(np.clip(eta, 0.0, self.eta_max))
        beyond = eta > self.eta_max
        if np.any(beyond):
            out = np.where(beyond, 1.0, out)
        return out


def _integrate_profile(shoot: float, eta_max: float, n_steps: int,
                       record: bool = False):
    """Fixed-step classical 4th-order integration of f''' = -f f''/2."""
    h = eta_max / n_steps
    f, fp, fpp = 0.0, 0.0, shoot
    if record:
        fs = np.empty(n_steps + 1)
        fps = np.empty(n_steps + 1)
        fpps = np.empty(n_steps + 1)
        fs[0], fps[0], fpps[0] = f, fp, fpp
    for i in range(n_steps):
        k1f, k1p, k1q = fp, fpp, -0.5 * f * fpp
        f2, p2, q2 = f + 0.5 * h * k1f, fp + 0.5 * h * k1p, fpp + 0.5 * h * k1q
        k2f, k2p, k2q = p2, q2, -0.5 * f2 * q2
        f3, p3, q3 = f + 0.5 * h * k2f, fp + 0.5 * h * k2p, fpp + 0.5 * h * k2q
        k3f, k3p, k3q = p3, q3, -0.5 * f3 * q3
        f4, p4, q4 = f + h * k3f, fp + h * k3p, fpp + h * k3q
        k4f, k4p, k4q = p4, q4, -0.5 * f4 * q4
        f += h * (k1f + 2.0 * k2f + 2.0 * k3f + k4f) / 6.0
        fp += h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        fpp += h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        if record:
            fs[i + 1], fps[i + 1], fpps[i + 1] = f, fp, fpp
    if record:
        return fs, fps, fpps
    return f, fp, fpp


def solve_blasius(eta_max: float = 10.0, n_steps: int = 4000) -> BlasiusTable:
    """Shoot on the wall curvature by bisection until the far-field velocity
    ratio reaches 1 within 1e-10, then tabulate the converged profile.
    """
    if eta_max < 8.0:
        raise _err("bad-argument", f"eta_max must be >= 8, got {eta_max}")
    if n_steps < 1000:
        raise _err("bad-argument", f"n_steps must be >= 1000, got {n_steps}")

    lo, hi = 0.1, 1.0
    r_lo = _integrate_profile(lo, eta_max, n_steps)[1] - 1.0
    r_hi = _integrate_profile(hi, eta_max, n_steps)[1] - 1.0
    if not (r_lo < 0.0 < r_hi):
        raise _err("no-convergence", "shooting bracket [0.1, 1.0] does not straddle the target")
    shoot = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r_mid = _integrate_profile(mid, eta_max, n_steps)[1] - 1.0
        if abs(r_mid) < 1e-10:
            shoot = mid
            break
        if r_mid < 0.0:
            lo = mid
        else:
            hi = mid
    if shoot is None:
        raise _err("no-convergence", "bisection did not reach |f'(end) - 1| < 1e-10 in 200 iterations")

    fs, fps, fpps = _integrate_profile(shoot, eta_max, n_steps, record=True)
    eta = np.linspace(0.0, eta_max, n_steps + 1)
    return BlasiusTable(eta=eta, f=fs, fp=fps, fpp=fpps)


def eta_of(x: float, y: float, params: FlowParams) -> float:
    """Similarity coordinate y*sqrt(Re/x) of a point at distance x from the
    leading edge."""
    if x <= 0.0:
        raise _err("nonpositive-x", f"similarity coordinate undefined at x = {x}")
    return float(y * np.sqrt(params.reynolds / x))


def sample_blasius_field(mesh: TriMesh, params: FlowParams,
                         table: BlasiusTable) -> CellField:
    """Velocity components of the similarity profile at every cell centroid.

    u = mach * f'(eta); v = mach * (eta f' - f) / (2 sqrt(Re x)).
    """
    c = mesh.centroids
    if c[:, 0].min() <= 0.0:
        raise _err("centroid-at-or-left-of-leading-edge",
                   f"cell {int(np.argmin(c[:, 0]))} has centroid x = {c[:, 0].min()}")
    x, y = c[:, 0], c[:, 1]
    if y.min() < 0.0:
        raise _err("bad-argument", "centroids below the wall plane y = 0")
    eta = y * np.sqrt(params.reynolds / x)
    fp = table.fp_of(eta)
    f = table.f_of(eta)
    u = params.mach * fp
    v = 0.5 * params.mach * (eta * fp - f) / np.sqrt(params.reynolds * x)
    return CellField(mesh=mesh, names=("u", "v"), values=np.column_stack([u, v]))


def sample_polynomial_field(mesh: TriMesh, polys: dict[str, Polynomial2D]) -> CellField:
    """Exact point values of the given polynomials at every cell centroid."""
    if not polys:
        raise _err("bad-coefficients", "no polynomial components given")
    c = mesh.centroids
    names = tuple(polys.keys())
    values = np.column_stack([polys[n].value(c[:, 0], c[:, 1]) for n in names])
    return CellField(mesh=mesh, names=names, values=values)


def polynomial_bc(polys: dict[str, Polynomial2D]) -> WallBC:
    """Boundary values taken from the polynomials' own wall trace."""
    return WallBC({n: p.value for n, p in polys.items()})


def with_value_noise(field_values: CellField, eps: float, seed: int) -> CellField:
    """Seeded uniform additive noise of amplitude eps times the component's
    value scale (its max magnitude over the field), emulating the absolute
    error level of a discrete solver.  eps = 0 returns the field unchanged.

    The amplitude is deliberately not proportional to the per-cell value:
    solver error does not vanish with the velocity at a no-slip wall, and
    value-proportional noise would cancel the very step-length amplification
    the difference-based estimators are sensitive to.
    """
    if eps < 0.0:
        raise _err("bad-argument", f"noise amplitude must be >= 0, got {eps}")
    if eps == 0.0:
        return field_values
    rng = np.random.Generator(np.random.Philox(seed))
    draw = rng.uniform(-1.0, 1.0, size=field_values.values.shape)
    scale = np.abs(field_values.values).max(axis=0, keepdims=True)
    return CellField(mesh=field_values.mesh, names=field_values.names,
                     values=field_values.values + eps * scale * draw)


# -- exact wall derivatives for error measurement -----------------------------


@dataclass(frozen=True)
class BlasiusFieldSpec:
    params: FlowParams
    table: BlasiusTable


@dataclass(frozen=True)
class PolynomialFieldSpec:
    polys: dict[str, Polynomial2D]


def exact_wall_derivative(field_spec, x_wall: float, component: str = "u") -> float:
    """True wall-normal derivative of a component at a flat-wall point."""
    if isinstance(field_spec, BlasiusFieldSpec):
        if component != "u":
            raise _err("unknown-field-kind",
                       f"exact wall derivative of component {component!r} not available")
        if x_wall <= 0.0:
            raise _err("nonpositive-x", f"wall derivative undefined at x = {x_wall}")
        p = field_spec.params
        return float(p.mach * field_spec.table.wall_shear_const
                     * np.sqrt(p.reynolds / x_wall))
    if isinstance(field_spec, PolynomialFieldSpec):
        poly = field_spec.polys.get(component)
        if poly is None:
            raise _err("unknown-field-kind", f"no polynomial for component {component!r}")
        return float(poly.gradient(x_wall, 0.0)[1])
    raise _err("unknown-field-kind", f"unsupported field spec {type(field_spec).__name__}")
