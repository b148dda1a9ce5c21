"""Skin-friction curves, smoothness metrics, and CSV/SVG artifact emission.

The smoothness metrics (total variation and the RMS of discrete second
differences) are this toolkit's quantitative stand-in for eyeballing how
noisy a wall curve looks; they are labeled as such in the CSV headers.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import WallgradError
from .fields import FlowParams, solve_blasius
from .wallnormal import FD_METHODS, LSQ_METHODS, Method, WallSample


def _err(code: str, detail: str) -> WallgradError:
    return WallgradError("report", code, detail)


@dataclass
class SkinFrictionCurve:
    """Skin-friction coefficient along the wall for one method."""

    method: str
    x: np.ndarray
    cfx: np.ndarray
    params: FlowParams

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.cfx = np.asarray(self.cfx, dtype=float)
        if self.x.shape != self.cfx.shape or self.x.ndim != 1:
            raise _err("invalid-curve", "x and cfx must be 1D arrays of equal length")
        if len(self.x) > 1 and not np.all(np.diff(self.x) > 0.0):
            raise _err("invalid-curve", "x must be strictly increasing")
        if not np.all(np.isfinite(self.cfx)):
            raise _err("invalid-curve", "cfx contains non-finite values")


@dataclass(frozen=True)
class NoiseReport:
    """Smoothness and error metrics of one curve over an x-window."""

    method: str
    window: tuple[float, float]
    n_samples: int
    tv: float            # total variation, sum of |successive differences|
    hf_rms: float        # RMS of discrete second differences
    mean_rel_err: float  # vs reference at the sample positions
    max_rel_err: float


def skin_friction(samples: Sequence[WallSample], params: FlowParams,
                  mode: str) -> SkinFrictionCurve:
    """Skin-friction coefficient from wall samples.

    ``fd`` mode uses the wall-normal derivative alone (the difference-based
    estimators carry nothing else); ``lsq`` mode projects the full viscous
    stress built from both velocity-component gradients.
    """
    if mode not in ("fd", "lsq"):
        raise _err("mode-method-mismatch", f"unknown mode {mode!r}")
    if not samples:
        raise _err("empty-samples", "no wall samples given")
    methods = {s.method for s in samples}
    if len(methods) > 1:
        raise _err("mode-method-mismatch", f"mixed methods in one curve: {sorted(m.value for m in methods)}")
    method = next(iter(methods))
    if mode == "fd" and method not in FD_METHODS:
        raise _err("mode-method-mismatch", f"fd mode cannot consume {method.value} samples")
    if mode == "lsq" and method not in LSQ_METHODS:
        raise _err("mode-method-mismatch", f"lsq mode cannot consume {method.value} samples")

    mu = params.mu_wall
    scale = 2.0 / params.mach ** 2
    xs = np.array([s.x_along_wall for s in samples])
    if mode == "fd":
        cfx = np.array([mu * s.dudn * scale for s in samples])
    else:
        vals = []
        for s in samples:
            if s.grad_u is None or s.grad_v is None:
                raise _err("missing-gradient",
                           f"{method.value} sample at x = {s.x_along_wall} lacks full gradients")
            ux, uy = s.grad_u
            vx, vy = s.grad_v
            tx = (2.0 / 3.0) * ux - (1.0 / 3.0) * vy
            ty = uy + vx
            vals.append(mu * (tx * s.normal[0] + ty * s.normal[1]) * scale)
        cfx = np.array(vals)
    order = np.argsort(xs)
    return SkinFrictionCurve(method=method.value, x=xs[order], cfx=cfx[order],
                             params=params)


@functools.lru_cache(maxsize=1)
def _default_wall_shear_const() -> float:
    return solve_blasius().wall_shear_const


def reference_cfx_fn(params: FlowParams,
                     wall_shear_const: float | None = None) -> Callable:
    """Closed-form laminar flat-plate reference, 2 f''(0) / sqrt(Re x)."""
    c = wall_shear_const if wall_shear_const is not None else _default_wall_shear_const()

    def ref(x):
        return 2.0 * c / np.sqrt(params.reynolds * np.asarray(x, dtype=float))
    return ref


def blasius_reference(params: FlowParams, x_list,
                      wall_shear_const: float | None = None) -> SkinFrictionCurve:
    """Reference skin-friction curve sampled at the given positions."""
    x = np.asarray(x_list, dtype=float)
    if x.size and x.min() <= 0.0:
        raise _err("nonpositive-x", f"reference undefined at x = {x.min()}")
    ref = reference_cfx_fn(params, wall_shear_const)
    return SkinFrictionCurve(method="reference", x=x, cfx=ref(x), params=params)


def noise_metrics(curve: SkinFrictionCurve, reference: Callable,
                  window: tuple[float, float]) -> NoiseReport:
    """Smoothness and reference-error metrics of a curve restricted to a window.

    ``reference`` is evaluated at the curve's own sample positions, so no
    interpolation error enters the metrics.
    """
    lo, hi = window
    mask = (curve.x >= lo) & (curve.x <= hi)
    n = int(mask.sum())
    if n < 8:
        raise _err("window-empty",
                   f"only {n} samples in window [{lo}, {hi}], need at least 8")
    x = curve.x[mask]
    c = curve.cfx[mask]
    tv = float(np.abs(np.diff(c)).sum())
    d2 = c[2:] - 2.0 * c[1:-1] + c[:-2]
    hf_rms = float(np.sqrt(np.mean(d2 ** 2)))
    r = np.asarray(reference(x), dtype=float)
    rel = np.abs(c - r) / np.abs(r)
    return NoiseReport(method=curve.method, window=(float(lo), float(hi)),
                       n_samples=n, tv=tv, hf_rms=hf_rms,
                       mean_rel_err=float(rel.mean()), max_rel_err=float(rel.max()))


# -- artifact emission --------------------------------------------------------

_CSV_HEADER = "method,x,cfx,href"
_NOISE_HEADER = ("# tv (total variation) and hf_rms (RMS of second differences) are this\n"
                 "# toolkit's smoothness metrics; mean/max_rel_err compare against the\n"
                 "# closed-form laminar flat-plate reference at the sample positions.\n"
                 "method,window_lo,window_hi,n_samples,tv,hf_rms,mean_rel_err,max_rel_err")


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def noise_report_path(curves_path) -> Path:
    return Path(curves_path).with_name("noise_report.csv")


def emit_csv(curves: Sequence[SkinFrictionCurve], reports: Sequence[NoiseReport],
             path, reference: Callable | None = None) -> None:
    """Write the curves CSV at ``path`` and, when reports are given, a noise
    report CSV named ``noise_report.csv`` next to it.

    The ``href`` column holds the closed-form reference at each x (nan where
    the reference is undefined).  Output is byte-deterministic.
    """
    if reference is None and curves:
        reference = reference_cfx_fn(curves[0].params)
    lines = [_CSV_HEADER]
    for curve in curves:
        for x, c in zip(curve.x, curve.cfx):
            href = float(reference(x)) if (reference is not None and x > 0.0) else float("nan")
            lines.append(f"{curve.method},{_fmt(x)},{_fmt(c)},{_fmt(href)}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise _err("io-error", f"{path}: {e}") from e

    if reports:
        rlines = [_NOISE_HEADER]
        for r in reports:
            rlines.append(",".join([r.method, _fmt(r.window[0]), _fmt(r.window[1]),
                                    str(r.n_samples), _fmt(r.tv), _fmt(r.hf_rms),
                                    _fmt(r.mean_rel_err), _fmt(r.max_rel_err)]))
        rpath = noise_report_path(path)
        try:
            rpath.write_text("\n".join(rlines) + "\n", encoding="utf-8")
        except OSError as e:
            raise _err("io-error", f"{rpath}: {e}") from e


def emit_svg(curves: Sequence[SkinFrictionCurve], path,
             reference: Callable | None = None, title: str | None = None) -> None:
    """Render one overlay figure of all curves (plus the reference) to SVG.

    Rendering goes through matplotlib with a pinned hash salt and no
    timestamp metadata, so identical inputs produce identical bytes.
    """
    import matplotlib
    from matplotlib.figure import Figure

    if reference is None and curves:
        reference = reference_cfx_fn(curves[0].params)

    fig = Figure(figsize=(7.2, 4.5))
    ax = fig.add_subplot()
    xmin = min((float(c.x.min()) for c in curves if len(c.x)), default=0.0)
    xmax = max((float(c.x.max()) for c in curves if len(c.x)), default=1.0)
    if reference is not None and xmax > 0.0:
        xr = np.linspace(max(xmin, 0.02 * xmax), xmax, 400)
        ax.plot(xr, reference(xr), "k--", lw=1.2, label="reference")
    for curve in curves:
        ax.plot(curve.x, curve.cfx, lw=0.9, label=curve.method)
    ax.set_xlabel("x")
    ax.set_ylabel("skin friction coefficient")
    if title:
        ax.set_title(title)
    if curves or reference is not None:
        ax.legend(fontsize=8, ncols=2)
    if reference is not None and xmax > 0.0:
        top = 3.0 * float(reference(max(xmin, 0.1 * xmax)))
        ax.set_ylim(0.0, top)
    ax.grid(True, lw=0.3, alpha=0.5)
    try:
        with matplotlib.rc_context({"svg.hashsalt": "wallgrad"}):
            fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise _err("io-error", f"{path}: {e}") from e
