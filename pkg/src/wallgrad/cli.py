"""Config-driven experiment runner and command-line entry point.

Subcommands:
  run            generate/read a mesh, sample a field, run the selected
                 wall-derivative methods, and write CSV/SVG artifacts
  genmesh        write a generated mesh to a file
  blasius-table  dump the boundary-layer similarity profile as CSV
  verify-linear  check that every method reproduces affine fields exactly
                 on a given mesh

Config files are flat ``key = value`` text with dotted sections; every key
has a default matching the flat-plate experiment, so ``wallgrad run`` works
with no config at all.  Errors print as ``error: <module>.<code>: <detail>``.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import WallgradError
from .fields import (BlasiusFieldSpec, CellField, FlowParams, Polynomial2D,
                     PolynomialFieldSpec, WallBC, no_slip, polynomial_bc,
                     sample_blasius_field, sample_polynomial_field, solve_blasius,
                     with_value_noise)
from .gradient import (LsqOptions, cell_gradients_from_nodal, cell_gradients_lsq,
                       nodal_lsq_gradients)
from .gridgen import GridSpec, generate
from .mesh import TriMesh, read_mesh, write_mesh
from .report import (NoiseReport, SkinFrictionCurve, emit_csv, emit_svg,
                     noise_metrics, reference_cfx_fn, skin_friction)
from .wallnormal import (LSQ_METHODS, Method, StepRule, wall_deriv_cang,
                         wall_deriv_fang, wall_deriv_fd1, wall_deriv_fd2,
                         wall_deriv_fd3, wall_deriv_fd_fawc, wall_deriv_ng)

ALL_METHODS = "NG,FANG,CANG,FD1,FD2,FD3_ETA,FD3_CONST,FD_FAWC"

DEFAULTS: dict[str, str] = {
    "seed": "42",
    "output": "out",
    "methods": ALL_METHODS,
    "wall_tag": "wall",
    "grid.kind": "generate",
    "grid.path": "",
    "grid.x0": "0.0",
    "grid.x1": "2.0",
    "grid.nx": "128",
    "grid.ny": "32",
    "grid.first_layer_height": "1e-4",
    "grid.stretch": "1.2",
    "grid.perturb": "0.3",
    "grid.diagonal_mode": "random",
    "field.kind": "blasius",
    "field.noise_eps": "0.0",
    "field.noise_seed": "0",
    "flow.mach": "0.15",
    "flow.reynolds": "1e6",
    "flow.mu": "",
    "step.eta": "0.5",
    "step.x_ref": "1.0",
    "lsq.weight_exponent": "1",
    "lsq.bc_augment": "true",
    "lsq.second_ring_threshold": "1e8",
    "cell_gradient": "nodal_average",
    "report.window_lo": "0.2",
    "report.window_hi": "1.8",
    "blasius.eta_max": "10.0",
    "blasius.n_steps": "4000",
}

_POLY_COEFFS = ("c00", "c10", "c01", "c20", "c11", "c02")


def _err(code: str, detail: str) -> WallgradError:
    return WallgradError("cli", code, detail)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _err("invalid-config", f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise _err("invalid-config", f"{source}:{lineno}: empty key")
        out[key] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _err("invalid-config", f"{path}: {e}") from e
    return parse_config_text(text, source=str(path))


def _is_poly_key(key: str) -> bool:
    parts = key.split(".")
    return len(parts) == 3 and parts[0] == "field" and parts[2] in _POLY_COEFFS


def _as_float(d: dict[str, str], key: str) -> float:
    try:
        return float(d[key])
    except ValueError:
        raise _err("invalid-config", f"{key} = {d[key]!r} is not a number") from None


def _as_int(d: dict[str, str], key: str) -> int:
    try:
        return int(d[key])
    except ValueError:
        raise _err("invalid-config", f"{key} = {d[key]!r} is not an integer") from None


def _as_bool(d: dict[str, str], key: str) -> bool:
    v = d[key].lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise _err("invalid-config", f"{key} = {d[key]!r} is not a boolean")


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description plus its echo-able key/value form."""

    effective: dict[str, str]
    seed: int
    output: Path
    methods: list[Method]
    wall_tag: str
    grid_spec: GridSpec | None
    mesh_path: str | None
    field_kind: str
    polys: dict[str, Polynomial2D] | None
    noise_eps: float
    noise_seed: int
    flow: FlowParams
    step_eta: float
    step_x_ref: float
    lsq: LsqOptions
    cell_gradient: str
    window: tuple[float, float]
    blasius_eta_max: float
    blasius_n_steps: int

    @classmethod
    def from_dict(cls, raw: dict[str, str]) -> "ExperimentConfig":
        unknown = [k for k in raw if k not in DEFAULTS and not _is_poly_key(k)]
        if unknown:
            raise _err("invalid-config", f"unknown key(s): {', '.join(sorted(unknown))}")
        d = dict(DEFAULTS)
        d.update(raw)

        methods: list[Method] = []
        names = [m.strip() for m in d["methods"].split(",") if m.strip()]
        if not names:
            raise _err("no-methods", "config selects no methods")
        for name in names:
            try:
                methods.append(Method(name))
            except ValueError:
                raise _err("invalid-config",
                           f"unknown method {name!r}, expected one of {ALL_METHODS}") from None

        seed = _as_int(d, "seed")
        grid_spec = None
        mesh_path = None
        if d["grid.kind"] == "generate":
            grid_spec = GridSpec(
                x_range=(_as_float(d, "grid.x0"), _as_float(d, "grid.x1")),
                nx=_as_int(d, "grid.nx"), ny=_as_int(d, "grid.ny"),
                first_layer_height=_as_float(d, "grid.first_layer_height"),
                stretch=_as_float(d, "grid.stretch"),
                perturb=_as_float(d, "grid.perturb"),
                diagonal_mode=d["grid.diagonal_mode"], seed=seed)
        elif d["grid.kind"] == "file":
            if not d["grid.path"]:
                raise _err("invalid-config", "grid.kind = file requires grid.path")
            mesh_path = d["grid.path"]
        else:
            raise _err("invalid-config", f"grid.kind must be generate or file, got {d['grid.kind']!r}")

        field_kind = d["field.kind"]
        polys = None
        if field_kind == "polynomial":
            polys = {}
            for key, value in d.items():
                if _is_poly_key(key):
                    _, comp, cname = key.split(".")
                    polys.setdefault(comp, {})[cname] = value
            if not polys:
                raise _err("invalid-config", "polynomial field requires field.<comp>.<cij> keys")
            polys = {comp: Polynomial2D.from_coeffs(coeffs) for comp, coeffs in polys.items()}
        elif field_kind != "blasius":
            raise _err("invalid-config", f"field.kind must be blasius or polynomial, got {field_kind!r}")

        flow = FlowParams(mach=_as_float(d, "flow.mach"),
                          reynolds=_as_float(d, "flow.reynolds"),
                          mu_wall=_as_float(d, "flow.mu") if d["flow.mu"] else None)
        lsq = LsqOptions(weight_exponent=_as_int(d, "lsq.weight_exponent"),
                         bc_augment=_as_bool(d, "lsq.bc_augment"),
                         bc_tag=d["wall_tag"],
                         second_ring_threshold=_as_float(d, "lsq.second_ring_threshold"))
        if d["cell_gradient"] not in ("nodal_average", "cell_lsq"):
            raise _err("invalid-config",
                       f"cell_gradient must be nodal_average or cell_lsq, got {d['cell_gradient']!r}")
        window = (_as_float(d, "report.window_lo"), _as_float(d, "report.window_hi"))
        if not window[0] < window[1]:
            raise _err("invalid-config", f"empty report window {window}")

        return cls(effective=d, seed=seed, output=Path(d["output"]), methods=methods,
                   wall_tag=d["wall_tag"], grid_spec=grid_spec, mesh_path=mesh_path,
                   field_kind=field_kind, polys=polys,
                   noise_eps=_as_float(d, "field.noise_eps"),
                   noise_seed=_as_int(d, "field.noise_seed"),
                   flow=flow, step_eta=_as_float(d, "step.eta"),
                   step_x_ref=_as_float(d, "step.x_ref"), lsq=lsq,
                   cell_gradient=d["cell_gradient"], window=window,
                   blasius_eta_max=_as_float(d, "blasius.eta_max"),
                   blasius_n_steps=_as_int(d, "blasius.n_steps"))

    def echo_text(self) -> str:
        keys = [k for k in DEFAULTS if k in self.effective]
        keys += sorted(k for k in self.effective if k not in DEFAULTS)
        return "\n".join(f"{k} = {self.effective[k]}" for k in keys) + "\n"


def _build_field(mesh: TriMesh, config: ExperimentConfig):
    """Sampled field, wall BC, closed-form reference, and exact-derivative spec."""
    if config.field_kind == "blasius":
        table = solve_blasius(config.blasius_eta_max, config.blasius_n_steps)
        field = sample_blasius_field(mesh, config.flow, table)
        bc = no_slip(("u", "v"))
        reference = reference_cfx_fn(config.flow, table.wall_shear_const)
        spec = BlasiusFieldSpec(params=config.flow, table=table)
    else:
        polys = dict(config.polys or {})
        polys.setdefault("v", Polynomial2D())
        field = sample_polynomial_field(mesh, polys)
        bc = polynomial_bc(polys)
        flow = config.flow
        scale = 2.0 * flow.mu_wall / flow.mach ** 2

        def reference(x, _polys=polys, _scale=scale):
            x = np.asarray(x, dtype=float)
            duy = _polys["u"].gradient(x, 0.0 * x)[1]
            dvx = _polys["v"].gradient(x, 0.0 * x)[0]
            return _scale * (duy + dvx)
        spec = PolynomialFieldSpec(polys=polys)
    return field, bc, reference, spec


def _method_samples(method: Method, mesh, field, nodal, cell_grads, bc, tag,
                    eta_rule: StepRule, const_rule: StepRule):
    if method is Method.NG:
        return wall_deriv_ng(mesh, nodal, tag)
    if method is Method.FANG:
        return wall_deriv_fang(mesh, nodal, tag)
    if method is Method.CANG:
        return wall_deriv_cang(mesh, nodal, tag)
    if method is Method.FD1:
        return wall_deriv_fd1(mesh, field, bc, tag)
    if method is Method.FD2:
        return wall_deriv_fd2(mesh, field, cell_grads, bc, tag)
    if method is Method.FD3_ETA:
        return wall_deriv_fd3(mesh, field, cell_grads, bc, tag, eta_rule)
    if method is Method.FD3_CONST:
        return wall_deriv_fd3(mesh, field, cell_grads, bc, tag, const_rule)
    if method is Method.FD_FAWC:
        return wall_deriv_fd_fawc(mesh, field, cell_grads, bc, tag)
    raise _err("invalid-config", f"unhandled method {method}")


def _thread_count() -> int:
    raw = os.environ.get("WALLGRAD_THREADS", "0")
    try:
        return max(0, int(raw))
    except ValueError:
        raise _err("invalid-config", f"WALLGRAD_THREADS = {raw!r} is not an integer") from None


def run(config: ExperimentConfig) -> int:
    """Run the full pipeline and write all artifacts into the output directory."""
    outdir = config.output
    outdir.mkdir(parents=True, exist_ok=True)

    mesh = generate(config.grid_spec) if config.grid_spec is not None \
        else read_mesh(config.mesh_path)
    write_mesh(mesh, outdir / "mesh.txt")

    field, bc, reference, _spec = _build_field(mesh, config)
    if config.noise_eps > 0.0:
        field = with_value_noise(field, config.noise_eps, config.noise_seed)

    nodal = nodal_lsq_gradients(mesh, field, bc, config.lsq)
    if config.cell_gradient == "nodal_average":
        cell_grads = cell_gradients_from_nodal(mesh, nodal)
    else:
        cell_grads = cell_gradients_lsq(mesh, field, bc, config.lsq)

    eta_rule = StepRule(kind="eta_profile", reynolds=config.flow.reynolds,
                        eta=config.step_eta)
    const_rule = StepRule(kind="global_constant", reynolds=config.flow.reynolds,
                          eta=config.step_eta, x_ref=config.step_x_ref)

    def compute(method: Method):
        return _method_samples(method, mesh, field, nodal, cell_grads, bc,
                               config.wall_tag, eta_rule, const_rule)

    threads = _thread_count()
    if threads >= 2:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {m: pool.submit(compute, m) for m in config.methods}
            samples = {m: futures[m].result() for m in config.methods}
    else:
        samples = {m: compute(m) for m in config.methods}

    curves: list[SkinFrictionCurve] = []
    reports: list[NoiseReport] = []
    for m in config.methods:
        mode = "lsq" if m in LSQ_METHODS else "fd"
        curve = skin_friction(samples[m], config.flow, mode)
        curves.append(curve)
        reports.append(noise_metrics(curve, reference, config.window))

    emit_csv(curves, reports, outdir / "curves.csv", reference)
    emit_svg(curves, outdir / "cfx.svg", reference)
    (outdir / "effective.cfg").write_text(config.echo_text(), encoding="utf-8")

    print(f"{'method':<10} {'n':>5} {'mean_rel_err':>13} {'tv':>12} {'hf_rms':>12}")
    for r in reports:
        print(f"{r.method:<10} {r.n_samples:>5} {r.mean_rel_err:>13.4e} "
              f"{r.tv:>12.4e} {r.hf_rms:>12.4e}")
    outside = {m.value: sum(s.outside_cell for s in ss) for m, ss in samples.items()
               if any(s.outside_cell for s in ss)}
    if outside:
        note = ", ".join(f"{k} {v}/{len(samples[Method(k)])}" for k, v in outside.items())
        print(f"probe point outside adjacent cell: {note}")
    print(f"artifacts written to {outdir}")
    return 0


# -- linear-exactness verification --------------------------------------------


def linear_exactness_errors(mesh: TriMesh, tag: str = "wall", n_fields: int = 5,
                            seed: int = 0, eta: float = 0.5,
                            reynolds: float = 1e4, x_ref: float = 1.0,
                            options: LsqOptions | None = None) -> dict[str, float]:
    """Max scaled error ``|dudn - exact| / (1 + |exact|)`` per method over
    seeded random affine fields.

    Every method except FD1 must reproduce any affine field; FD1 is checked
    on affine fields with no tangential variation, which is the only class
    it can be exact for.
    """
    opts = options or LsqOptions(bc_tag=tag)
    rng = np.random.Generator(np.random.Philox(seed))
    general = rng.uniform(-2.0, 2.0, size=(n_fields, 3))   # a + b x + c y
    normal_only = np.column_stack([rng.uniform(-2.0, 2.0, size=(n_fields, 2))[:, 0],
                                   np.zeros(n_fields),
                                   rng.uniform(-2.0, 2.0, size=n_fields)])

    coeffs = np.vstack([general, normal_only])
    names = tuple(f"g{i}" for i in range(n_fields)) + \
        tuple(f"t{i}" for i in range(n_fields))
    c = mesh.centroids
    values = np.column_stack([a + b * c[:, 0] + cc * c[:, 1] for a, b, cc in coeffs])
    field = CellField(mesh=mesh, names=names, values=values)
    bc = WallBC({name: (lambda x, y, _a=a, _b=b, _c=cc: _a + _b * x + _c * y)
                 for name, (a, b, cc) in zip(names, coeffs)})

    nodal = nodal_lsq_gradients(mesh, field, bc, opts)
    cell_grads = cell_gradients_from_nodal(mesh, nodal)
    eta_rule = StepRule(kind="eta_profile", reynolds=reynolds, eta=eta)
    const_rule = StepRule(kind="global_constant", reynolds=reynolds, eta=eta, x_ref=x_ref)

    def max_err(samples, exact):
        return max(abs(s.dudn - exact) / (1.0 + abs(exact)) for s in samples)

    out = {m.value: 0.0 for m in Method}
    for k, name in enumerate(names):
        exact = float(coeffs[k, 2])   # flat wall: exact normal derivative is c
        general_field = k < n_fields
        if general_field:
            out["NG"] = max(out["NG"], max_err(wall_deriv_ng(mesh, nodal, tag, name), exact))
            out["FANG"] = max(out["FANG"], max_err(wall_deriv_fang(mesh, nodal, tag, name), exact))
            out["CANG"] = max(out["CANG"], max_err(wall_deriv_cang(mesh, nodal, tag, name), exact))
            out["FD2"] = max(out["FD2"], max_err(
                wall_deriv_fd2(mesh, field, cell_grads, bc, tag, name), exact))
            out["FD3_ETA"] = max(out["FD3_ETA"], max_err(
                wall_deriv_fd3(mesh, field, cell_grads, bc, tag, eta_rule, name), exact))
            out["FD3_CONST"] = max(out["FD3_CONST"], max_err(
                wall_deriv_fd3(mesh, field, cell_grads, bc, tag, const_rule, name), exact))
            out["FD_FAWC"] = max(out["FD_FAWC"], max_err(
                wall_deriv_fd_fawc(mesh, field, cell_grads, bc, tag, name), exact))
        else:
            out["FD1"] = max(out["FD1"], max_err(
                wall_deriv_fd1(mesh, field, bc, tag, name), exact))
    return out


# -- subcommands ---------------------------------------------------------------


def _cmd_run(args) -> int:
    raw: dict[str, str] = {}
    if args.config:
        raw.update(load_config(args.config))
    if args.out is not None:
        raw["output"] = args.out
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    if args.methods is not None:
        raw["methods"] = args.methods
    return run(ExperimentConfig.from_dict(raw))


def _cmd_genmesh(args) -> int:
    raw: dict[str, str] = {}
    if args.config:
        raw.update(load_config(args.config))
    overrides = {
        "grid.x0": args.x0, "grid.x1": args.x1, "grid.nx": args.nx,
        "grid.ny": args.ny, "grid.first_layer_height": args.first_layer_height,
        "grid.stretch": args.stretch, "grid.perturb": args.perturb,
        "grid.diagonal_mode": args.diagonal_mode, "seed": args.seed,
    }
    raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    d = dict(DEFAULTS)
    d.update({k: v for k, v in raw.items() if k in DEFAULTS})
    spec = GridSpec(x_range=(_as_float(d, "grid.x0"), _as_float(d, "grid.x1")),
                    nx=_as_int(d, "grid.nx"), ny=_as_int(d, "grid.ny"),
                    first_layer_height=_as_float(d, "grid.first_layer_height"),
                    stretch=_as_float(d, "grid.stretch"),
                    perturb=_as_float(d, "grid.perturb"),
                    diagonal_mode=d["grid.diagonal_mode"],
                    seed=_as_int(d, "seed"))
    mesh = generate(spec)
    write_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_nodes} nodes, {mesh.n_cells} cells, "
          f"{mesh.n_bfaces} boundary faces")
    return 0


def _cmd_blasius_table(args) -> int:
    table = solve_blasius(args.eta_max, args.n_steps)
    lines = ["eta,f,fp,fpp"]
    for e, f, fp, fpp in zip(table.eta, table.f, table.fp, table.fpp):
        lines.append(f"{e:.12g},{f:.12g},{fp:.12g},{fpp:.12g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}: {len(table.eta)} rows, "
              f"wall curvature {table.wall_shear_const:.6f}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify_linear(args) -> int:
    mesh = read_mesh(args.mesh)
    errors = linear_exactness_errors(mesh, tag=args.tag, n_fields=args.fields,
                                     seed=args.seed, eta=args.eta,
                                     reynolds=args.reynolds)
    ok = True
    for name, err in errors.items():
        status = "PASS" if err < args.tol else "FAIL"
        ok &= err < args.tol
        note = "  (zero-tangential-variation fields)" if name == "FD1" else ""
        print(f"{name:<10} max scaled error {err:.3e}  {status}{note}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wallgrad",
        description="Wall-normal derivatives and skin friction on irregular "
                    "triangular grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full experiment pipeline")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", help="output directory (default from config)")
    p.add_argument("--seed", type=int, help="override the experiment seed")
    p.add_argument("--methods", help="comma-separated method list")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("genmesh", help="generate a boundary-layer mesh file")
    p.add_argument("--out", required=True, help="mesh file to write")
    p.add_argument("--config", help="config file supplying grid.* keys")
    p.add_argument("--seed", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--x0", type=float)
    p.add_argument("--x1", type=float)
    p.add_argument("--first-layer-height", type=float, dest="first_layer_height")
    p.add_argument("--stretch", type=float)
    p.add_argument("--perturb", type=float)
    p.add_argument("--diagonal-mode", dest="diagonal_mode",
                   choices=("fixed", "alternating", "random"))
    p.set_defaults(fn=_cmd_genmesh)

    p = sub.add_parser("blasius-table", help="dump the similarity profile as CSV")
    p.add_argument("--out", help="CSV file (default: stdout)")
    p.add_argument("--eta-max", type=float, default=10.0, dest="eta_max")
    p.add_argument("--n-steps", type=int, default=4000, dest="n_steps")
    p.set_defaults(fn=_cmd_blasius_table)

    p = sub.add_parser("verify-linear", help="linear-exactness check on a mesh")
    p.add_argument("--mesh", required=True, help="mesh file to verify against")
    p.add_argument("--tag", default="wall")
    p.add_argument("--fields", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--reynolds", type=float, default=1e4)
    p.set_defaults(fn=_cmd_verify_linear)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except WallgradError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
