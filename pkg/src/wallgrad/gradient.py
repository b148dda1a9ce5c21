"""Weighted linear least-squares gradients at nodes from cell-centered values,
plus the face/cell averaging operators and per-cell gradient sources.

The nodal solve is fully linear: at each node the unknowns are the value at
the node and the two gradient components, fitted to the surrounding cell
values (and, at wall nodes, to known boundary values at the wall face
midpoints).  This is exact for affine fields on any stencil of rank 3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WallgradError
from .fields import CellField, WallBC
from .mesh import TriMesh

# Above this condition estimate the stencil is treated as numerically rank
# deficient even after second-ring augmentation.
_RANK_DEFICIENT_CONDITION = 1e12


def _err(code: str, detail: str) -> WallgradError:
    return WallgradError("gradient", code, detail)


@dataclass(frozen=True)
class LsqOptions:
    """Knobs of the nodal least-squares solve."""

    weight_exponent: int = 1          # inverse-distance exponent, 0, 1 or 2
    bc_augment: bool = True           # add wall-value rows at wall nodes
    bc_tag: str = "wall"
    second_ring_threshold: float = 1e8

    def __post_init__(self):
        if self.weight_exponent not in (0, 1, 2):
            raise _err("bad-options",
                       f"weight_exponent must be 0, 1 or 2, got {self.weight_exponent}")


@dataclass
class NodalGradientField:
    """Per-node gradients for every field component, with stencil metadata."""

    mesh: TriMesh
    names: tuple[str, ...]
    gradients: np.ndarray      # (n_nodes, n_components, 2)
    stencil_sizes: np.ndarray  # rows used per node
    bc_rows: np.ndarray        # whether wall-value rows were included
    condition: np.ndarray      # condition estimate of the scaled system

    def component(self, name: str) -> np.ndarray:
        try:
            return self.gradients[:, self.names.index(name), :]
        except ValueError:
            raise _err("unknown-component", f"no gradients for component {name!r}") from None


def _assemble(offsets: np.ndarray, values: np.ndarray, q: int):
    """Row-weighted, column-scaled system for the fully linear fit.

    The right-hand side is centered on its weighted mean so the O(1) value
    level cannot contaminate the tiny wall-normal column on anisotropic
    stencils; the constant unknown absorbs the shift exactly.
    """
    r = np.hypot(offsets[:, 0], offsets[:, 1])
    w = r ** float(-q) if q else np.ones_like(r)
    sw = np.sqrt(w)
    a = np.column_stack([np.ones(len(offsets)), offsets[:, 0], offsets[:, 1]])
    a *= sw[:, None]
    mean = (w @ values) / w.sum()
    b = (values - mean) * sw[:, None]
    col = np.linalg.norm(a, axis=0)
    col[col == 0.0] = 1.0
    a /= col[None, :]
    m = a.T @ a
    cond = float(np.sqrt(np.linalg.cond(m)))
    return a, b, col, m, cond


def nodal_lsq_gradients(mesh: TriMesh, field: CellField, bc: WallBC | None = None,
                        options: LsqOptions | None = None) -> NodalGradientField:
    """Weighted linear LSQ gradient of every component at every node.

    The stencil is the first ring of cells incident to the node, augmented
    with the second ring when it has fewer than 4 rows or is poorly
    conditioned.  With ``options.bc_augment`` and a boundary-value object,
    wall nodes also fit the known values at their wall-face midpoints.
    """
    if field.mesh is not mesh:
        raise _err("mesh-mismatch", "field was sampled on a different mesh")
    opts = options or LsqOptions()
    ncomp = len(field.names)
    values = field.values

    bc_points: dict[int, list[int]] = {}
    bc_values: dict[int, np.ndarray] = {}
    if opts.bc_augment and bc is not None:
        for f in mesh.boundary_faces(opts.bc_tag):
            geom = mesh.bface_geom(int(f))
            vals = np.array([bc.value(n, geom.midpoint) for n in field.names])
            bc_values[int(f)] = vals
            for n in mesh.bface_nodes[f]:
                bc_points.setdefault(int(n), []).append(int(f))

    n_nodes = mesh.n_nodes
    grads = np.empty((n_nodes, ncomp, 2))
    sizes = np.empty(n_nodes, dtype=np.int64)
    has_bc = np.zeros(n_nodes, dtype=bool)
    conds = np.empty(n_nodes)

    centroids = mesh.centroids

    def rows_for(node: int, cells: np.ndarray):
        pts = centroids[cells]
        vals = values[cells]
        faces = bc_points.get(node)
        if faces:
            mids = np.array([mesh.bface_geom(f).midpoint for f in faces])
            bvals = np.array([bc_values[f] for f in faces])
            pts = np.vstack([pts, mids])
            vals = np.vstack([vals, bvals])
        return pts - mesh.nodes[node], vals

    for i in range(n_nodes):
        cells = mesh.node_cells[i]
        if len(cells) == 0:
            raise _err("rank-deficient-stencil", f"node {i} belongs to no cell")
        offsets, vals = rows_for(i, cells)
        a, b, col, m, cond = _assemble(offsets, vals, opts.weight_exponent)
        if len(offsets) < 4 or cond > opts.second_ring_threshold:
            second = np.unique(np.concatenate(
                [mesh.node_cells[int(v)] for c in cells for v in mesh.tris[c]]))
            if len(second) > len(cells):
                cells = second
                offsets, vals = rows_for(i, cells)
                a, b, col, m, cond = _assemble(offsets, vals, opts.weight_exponent)
        if len(offsets) < 3 or not np.isfinite(cond) or cond > _RANK_DEFICIENT_CONDITION:
            raise _err("rank-deficient-stencil",
                       f"node {i}: {len(offsets)} rows, condition estimate {cond:.2e} "
                       "after second-ring augmentation")
        if cond <= opts.second_ring_threshold:
            sol = np.linalg.solve(m, a.T @ b)
        else:
            sol, *_ = np.linalg.lstsq(a, b, rcond=None)
        grads[i] = (sol[1:, :] / col[1:, None]).T
        sizes[i] = len(offsets)
        has_bc[i] = i in bc_points
        conds[i] = cond

    return NodalGradientField(mesh=mesh, names=field.names, gradients=grads,
                              stencil_sizes=sizes, bc_rows=has_bc, condition=conds)


def face_average_gradient(grad_field: NodalGradientField, bface: int,
                          component: str = "u") -> np.ndarray:
    """Arithmetic mean of the two endpoint nodal gradients of a boundary face."""
    g = grad_field.component(component)
    a, b = grad_field.mesh.bface_nodes[bface]
    return 0.5 * (g[a] + g[b])


def cell_average_gradient(grad_field: NodalGradientField, cell: int,
                          component: str = "u") -> np.ndarray:
    """Arithmetic mean of the nodal gradients at the cell's three vertices."""
    g = grad_field.component(component)
    return g[grad_field.mesh.tris[cell]].mean(axis=0)


# -- per-cell gradient sources for the difference-based estimators ------------


@dataclass
class CellGradients:
    """One gradient per cell per component, from a named source."""

    mesh: TriMesh
    names: tuple[str, ...]
    gradients: np.ndarray  # (n_cells, n_components, 2)
    source: str

    def component(self, name: str) -> np.ndarray:
        try:
            return self.gradients[:, self.names.index(name), :]
        except ValueError:
            raise _err("unknown-component", f"no cell gradients for component {name!r}") from None


def cell_gradients_from_nodal(mesh: TriMesh,
                              nodal: NodalGradientField) -> CellGradients:
    """Cell gradient as the mean of the three vertex nodal gradients."""
    if nodal.mesh is not mesh:
        raise _err("mesh-mismatch", "nodal gradients belong to a different mesh")
    grads = nodal.gradients[mesh.tris].mean(axis=1)
    return CellGradients(mesh=mesh, names=nodal.names, gradients=grads,
                         source="nodal_average")


def cell_gradients_lsq(mesh: TriMesh, field: CellField, bc: WallBC | None = None,
                       options: LsqOptions | None = None) -> CellGradients:
    """Direct gradient-only LSQ at each cell over its face neighbors, with
    wall-value rows on wall cells.  Anchored at the cell's own value, so two
    independent rows suffice."""
    if field.mesh is not mesh:
        raise _err("mesh-mismatch", "field was sampled on a different mesh")
    opts = options or LsqOptions()
    ncomp = len(field.names)

    cell_bfaces: dict[int, list[int]] = {}
    if opts.bc_augment and bc is not None:
        for f in mesh.boundary_faces(opts.bc_tag):
            cell_bfaces.setdefault(int(mesh.bface_cell[f]), []).append(int(f))

    centroids = mesh.centroids
    grads = np.empty((mesh.n_cells, ncomp, 2))

    def assemble(c, nbrs):
        pts = [centroids[n] for n in nbrs]
        vals = [field.values[n] for n in nbrs]
        for f in cell_bfaces.get(c, ()):
            geom = mesh.bface_geom(f)
            pts.append(geom.midpoint)
            vals.append(np.array([bc.value(n, geom.midpoint) for n in field.names]))
        if len(pts) < 2:
            return None
        offsets = np.asarray(pts) - centroids[c]
        dvals = np.asarray(vals) - field.values[c]
        r = np.hypot(offsets[:, 0], offsets[:, 1])
        w = r ** float(-opts.weight_exponent) if opts.weight_exponent else np.ones_like(r)
        sw = np.sqrt(w)
        a = offsets * sw[:, None]
        b = dvals * sw[:, None]
        col = np.linalg.norm(a, axis=0)
        col[col == 0.0] = 1.0
        a /= col[None, :]
        return a, b, col, float(np.linalg.cond(a))

    for c in range(mesh.n_cells):
        nbrs = mesh.cell_neighbors[c][mesh.cell_neighbors[c] >= 0]
        system = assemble(c, nbrs)
        if system is None or system[3] > opts.second_ring_threshold:
            # widen to cells sharing a node, as for deficient nodal stencils
            wide = np.unique(np.concatenate([mesh.node_cells[int(v)]
                                             for v in mesh.tris[c]]))
            system = assemble(c, wide[wide != c])
        if system is None:
            raise _err("rank-deficient-stencil", f"cell {c}: fewer than 2 rows")
        a, b, col, cond = system
        if not np.isfinite(cond) or cond > _RANK_DEFICIENT_CONDITION:
            raise _err("rank-deficient-stencil",
                       f"cell {c}: collinear stencil, condition estimate {cond:.2e}")
        sol, *_ = np.linalg.lstsq(a, b, rcond=None)
        grads[c] = (sol / col[:, None]).T

    return CellGradients(mesh=mesh, names=field.names, gradients=grads,
                         source="cell_lsq")
