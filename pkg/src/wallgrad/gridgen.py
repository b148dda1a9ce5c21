"""Seeded generator of irregular anisotropic boundary-layer triangular grids.

The generator starts from a structured quad grid with geometric wall-normal
stretching, splits each quad along a diagonal, and jitters node positions
with a counter-based RNG (numpy Philox) so that identical specs produce
bit-identical meshes.  Wall nodes move tangentially only; the wall stays at
y = 0 exactly, so the analytic wall normal is (0, 1) and any scatter in
wall-adjacent centroid heights comes from the triangulation alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WallgradError
from .mesh import TriMesh, build_mesh

_DIAGONAL_MODES = ("fixed", "alternating", "random")


def _err(code: str, detail: str) -> WallgradError:
    return WallgradError("gridgen", code, detail)


@dataclass(frozen=True)
class GridSpec:
    """Parameters of one generated grid.

    ``perturb`` is the jitter budget as a fraction of the local spacing; any
    value below 0.5 is guaranteed not to invert an element (the applied
    offset is perturb/2 of the smaller adjacent spacing per direction, which
    keeps every triangle area at least (1 - 2*perturb) of its share of the
    unperturbed quad).
    """

    x_range: tuple[float, float] = (0.0, 2.0)
    nx: int = 128
    ny: int = 32
    first_layer_height: float = 1.0e-4
    stretch: float = 1.2
    perturb: float = 0.3
    diagonal_mode: str = "random"
    seed: int = 42


def _validate(spec: GridSpec) -> None:
    if spec.nx < 1 or spec.ny < 1:
        raise _err("bad-spec", f"nx and ny must be >= 1, got {spec.nx}x{spec.ny}")
    if not spec.x_range[1] > spec.x_range[0]:
        raise _err("bad-spec", f"empty x_range {spec.x_range}")
    if spec.first_layer_height <= 0.0:
        raise _err("bad-spec", f"first_layer_height must be positive, got {spec.first_layer_height}")
    if spec.stretch < 1.0:
        raise _err("bad-spec", f"stretch must be >= 1, got {spec.stretch}")
    if not 0.0 <= spec.perturb < 0.5:
        raise _err("bad-spec", f"perturb must lie in [0, 0.5), got {spec.perturb}")
    if spec.diagonal_mode not in _DIAGONAL_MODES:
        raise _err("bad-spec", f"diagonal_mode must be one of {_DIAGONAL_MODES}, got {spec.diagonal_mode!r}")


def generate(spec: GridSpec) -> TriMesh:
    """Generate the irregular boundary-layer mesh described by ``spec``.

    Bottom edges are tagged ``wall``, the other boundary edges ``far``.
    Deterministic: the same spec (including seed) yields bit-identical meshes.
    """
    _validate(spec)
    nx, ny = spec.nx, spec.ny
    x0, x1 = spec.x_range

    xs = np.linspace(x0, x1, nx + 1)
    dy = spec.first_layer_height * spec.stretch ** np.arange(ny)
    ys = np.concatenate([[0.0], np.cumsum(dy)])

    grid = np.empty((ny + 1, nx + 1, 2))
    grid[:, :, 0] = xs[None, :]
    grid[:, :, 1] = ys[:, None]

    # Draw order is fixed (node jitter first, then diagonals); goldens depend on it.
    rng = np.random.Generator(np.random.Philox(spec.seed))
    jitter = rng.uniform(-1.0, 1.0, size=(ny + 1, nx + 1, 2))
    diag_draw = rng.uniform(0.0, 1.0, size=(ny, nx))

    alpha = 0.5 * spec.perturb
    dx = (x1 - x0) / nx
    amp_x = np.full((ny + 1, nx + 1), alpha * dx)
    amp_x[:, 0] = 0.0
    amp_x[:, nx] = 0.0
    amp_y = np.zeros((ny + 1, nx + 1))
    for j in range(1, ny):
        amp_y[j, :] = alpha * min(dy[j - 1], dy[j])
    grid[:, :, 0] += jitter[:, :, 0] * amp_x
    grid[:, :, 1] += jitter[:, :, 1] * amp_y

    nodes = grid.reshape(-1, 2)

    def nid(i: int, j: int) -> int:
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            bl, br = nid(i, j), nid(i + 1, j)
            tr, tl = nid(i + 1, j + 1), nid(i, j + 1)
            if spec.diagonal_mode == "fixed":
                use_bl_tr = True
            elif spec.diagonal_mode == "alternating":
                use_bl_tr = (i + j) % 2 == 0
            else:
                use_bl_tr = diag_draw[j, i] < 0.5
            if use_bl_tr:
                tris.append((bl, br, tr))
                tris.append((bl, tr, tl))
            else:
                tris.append((bl, br, tl))
                tris.append((br, tr, tl))
    tris = np.array(tris, dtype=np.int64)

    d1 = nodes[tris[:, 1]] - nodes[tris[:, 0]]
    d2 = nodes[tris[:, 2]] - nodes[tris[:, 0]]
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if areas.min() <= 0.0:
        raise _err("inverted-element",
                   f"triangle {int(np.argmin(areas))} has area {areas.min():.3e}")

    bfaces = []
    for i in range(nx):
        bfaces.append((nid(i, 0), nid(i + 1, 0), "wall"))
    for i in range(nx):
        bfaces.append((nid(i, ny), nid(i + 1, ny), "far"))
    for j in range(ny):
        bfaces.append((nid(0, j), nid(0, j + 1), "far"))
        bfaces.append((nid(nx, j), nid(nx, j + 1), "far"))

    return build_mesh(nodes, tris, bfaces)


def centroid_height_profile(mesh: TriMesh, tag: str) -> list[tuple[float, float]]:
    """Per tagged boundary face, the adjacent cell-centroid height above the
    face midpoint measured along the interior normal, sorted by midpoint x.

    On a regular grid the heights are constant; jittered grids show the
    random height variation the difference-based estimators are sensitive to.
    """
    faces = mesh.boundary_faces(tag)
    if len(faces) == 0:
        raise _err("unknown-tag", f"no boundary faces tagged {tag!r}")
    out = []
    for f in faces:
        geom = mesh.bface_geom(int(f))
        centroid = mesh.centroids[mesh.bface_cell[f]]
        height = float(geom.unit_normal @ (centroid - geom.midpoint))
        out.append((float(geom.midpoint[0]), height))
    out.sort(key=lambda p: p[0])
    return out
