"""The seven wall-normal-derivative estimators, one uniform WallSample output.

Gradient-projection estimators (computed where the gradients live):
  NG    projects the nodal gradient at each wall node.
  FANG  projects the mean of the two endpoint nodal gradients at each face.
  CANG  projects the mean of the adjacent cell's three nodal gradients.

Difference-based estimators (one per wall face, adjacent cell c):
  FD1      (u_c - u_wall) / height of the cell centroid above the face.
  FD2      like FD1 but the cell value is first moved straight above the
           face midpoint using the cell gradient; exact for affine fields.
  FD3      like FD2 but the probe point sits at a prescribed step above the
           face midpoint, common to all faces (either following the
           boundary-layer similarity height or a global constant), which
           removes the random per-face step the grid irregularity causes.
  FD_FAWC  like FD3 with the step taken from the cell's face-area-weighted
           centroid height, a purely geometric surrogate for a common step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import WallgradError
from .fields import CellField, WallBC
from .gradient import CellGradients, NodalGradientField, cell_average_gradient, \
    face_average_gradient
from .mesh import TriMesh

logger = logging.getLogger(__name__)


def _err(code: str, detail: str) -> WallgradError:
    return WallgradError("wallnormal", code, detail)


class Method(str, Enum):
    NG = "NG"
    FANG = "FANG"
    CANG = "CANG"
    FD1 = "FD1"
    FD2 = "FD2"
    FD3_ETA = "FD3_ETA"
    FD3_CONST = "FD3_CONST"
    FD_FAWC = "FD_FAWC"


LSQ_METHODS = frozenset({Method.NG, Method.FANG, Method.CANG})
FD_METHODS = frozenset({Method.FD1, Method.FD2, Method.FD3_ETA,
                        Method.FD3_CONST, Method.FD_FAWC})


@dataclass
class WallSample:
    """One wall-normal-derivative estimate at a boundary node or face."""

    location: np.ndarray
    x_along_wall: float
    dudn: float
    method: Method
    normal: np.ndarray
    aux_step: float | None = None       # step length h used (difference methods)
    grad_u: np.ndarray | None = None    # full gradients (projection methods)
    grad_v: np.ndarray | None = None
    outside_cell: bool = False          # probe point left the adjacent cell


@dataclass(frozen=True)
class StepRule:
    """Step-length prescription for the common-step estimator.

    ``eta_profile`` keeps the step constant in the boundary-layer similarity
    coordinate: h(x) = eta * sqrt(x / reynolds).  ``global_constant`` uses
    that height evaluated once at ``x_ref`` for every face.
    """

    kind: str
    reynolds: float
    eta: float = 0.5
    x_ref: float = 1.0

    def __post_init__(self):
        if self.kind not in ("eta_profile", "global_constant"):
            raise _err("bad-step-rule", f"unknown step rule kind {self.kind!r}")
        if self.eta <= 0.0:
            raise _err("bad-step-rule", f"eta must be positive, got {self.eta}")
        if self.reynolds <= 0.0:
            raise _err("bad-step-rule", f"reynolds must be positive, got {self.reynolds}")
        if self.kind == "global_constant" and self.x_ref <= 0.0:
            raise _err("bad-step-rule", f"x_ref must be positive, got {self.x_ref}")


def step_length(rule: StepRule, x_j: float) -> float:
    """Step length used at a wall face with midpoint coordinate ``x_j``."""
    if rule.kind == "eta_profile":
        if x_j <= 0.0:
            raise _err("nonpositive-x",
                       f"eta-profile step undefined at face coordinate x = {x_j}")
        h = rule.eta * float(np.sqrt(x_j / rule.reynolds))
    else:
        h = rule.eta * float(np.sqrt(rule.x_ref / rule.reynolds))
    if h <= 0.0:
        raise _err("nonpositive-step", f"step rule produced h = {h}")
    return h


def _tagged_faces(mesh: TriMesh, tag: str):
    """Tagged faces with geometry and adjacent cell, sorted by midpoint x."""
    faces = mesh.boundary_faces(tag)
    if len(faces) == 0:
        raise _err("unknown-tag", f"no boundary faces tagged {tag!r}")
    rows = [(int(f), mesh.bface_geom(int(f)), int(mesh.bface_cell[f])) for f in faces]
    rows.sort(key=lambda r: float(r[1].midpoint[0]))
    return rows


def _point_in_cell(mesh: TriMesh, cell: int, point: np.ndarray) -> bool:
    v = mesh.nodes[mesh.tris[cell]]
    sign = 0.0
    for k in range(3):
        e = v[(k + 1) % 3] - v[k]
        d = point - v[k]
        cross = e[0] * d[1] - e[1] * d[0]
        if cross < -1e-12 * (e @ e):
            return False
        sign += cross
    return True


def wall_deriv_ng(mesh: TriMesh, grad_field: NodalGradientField, tag: str,
                  component: str = "u") -> list[WallSample]:
    """Nodal gradient projected on the node normal, one sample per wall node."""
    if grad_field.mesh is not mesh:
        raise _err("mesh-mismatch", "gradient field belongs to a different mesh")
    g = grad_field.component(component)
    has_v = "v" in grad_field.names
    gv = grad_field.component("v") if has_v else None
    samples = []
    for node in mesh.boundary_nodes(tag):
        node = int(node)
        normal = mesh.node_normal(node, tag).unit_normal
        grad = g[node]
        samples.append(WallSample(
            location=mesh.nodes[node].copy(), x_along_wall=float(mesh.nodes[node, 0]),
            dudn=float(grad @ normal), method=Method.NG, normal=normal,
            grad_u=grad.copy(), grad_v=gv[node].copy() if has_v else None))
    samples.sort(key=lambda s: s.x_along_wall)
    return samples


def wall_deriv_fang(mesh: TriMesh, grad_field: NodalGradientField, tag: str,
                    component: str = "u") -> list[WallSample]:
    """Face-averaged nodal gradient projected on the face normal."""
    if grad_field.mesh is not mesh:
        raise _err("mesh-mismatch", "gradient field belongs to a different mesh")
    has_v = "v" in grad_field.names
    samples = []
    for f, geom, _cell in _tagged_faces(mesh, tag):
        grad = face_average_gradient(grad_field, f, component)
        gv = face_average_gradient(grad_field, f, "v") if has_v else None
        samples.append(WallSample(
            location=geom.midpoint.copy(), x_along_wall=float(geom.midpoint[0]),
            dudn=float(grad @ geom.unit_normal), method=Method.FANG,
            normal=geom.unit_normal, grad_u=grad, grad_v=gv))
    return samples


def wall_deriv_cang(mesh: TriMesh, grad_field: NodalGradientField, tag: str,
                    component: str = "u") -> list[WallSample]:
    """Cell-averaged nodal gradient of the adjacent cell projected on the
    face normal."""
    if grad_field.mesh is not mesh:
        raise _err("mesh-mismatch", "gradient field belongs to a different mesh")
    has_v = "v" in grad_field.names
    samples = []
    for f, geom, cell in _tagged_faces(mesh, tag):
        grad = cell_average_gradient(grad_field, cell, component)
        gv = cell_average_gradient(grad_field, cell, "v") if has_v else None
        samples.append(WallSample(
            location=geom.midpoint.copy(), x_along_wall=float(geom.midpoint[0]),
            dudn=float(grad @ geom.unit_normal), method=Method.CANG,
            normal=geom.unit_normal, grad_u=grad, grad_v=gv))
    return samples


def wall_deriv_fd1(mesh: TriMesh, field: CellField, bc: WallBC, tag: str,
                   component: str = "u") -> list[WallSample]:
    """One-sided difference between the adjacent cell value and the wall value
    over the centroid height.  The estimate effectively lives where the
    centroid projects onto the wall, so tangential field variation leaks in.
    """
    if field.mesh is not mesh:
        raise _err("mesh-mismatch", "field was sampled on a different mesh")
    u = field.component(component)
    samples = []
    for f, geom, cell in _tagged_faces(mesh, tag):
        h = float(geom.unit_normal @ (mesh.centroids[cell] - geom.midpoint))
        if h <= 0.0:
            raise _err("nonpositive-height", f"face {f}: centroid height {h:.3e}")
        ub = bc.value(component, geom.midpoint)
        samples.append(WallSample(
            location=geom.midpoint.copy(), x_along_wall=float(geom.midpoint[0]),
            dudn=(float(u[cell]) - ub) / h, method=Method.FD1,
            normal=geom.unit_normal, aux_step=h))
    return samples


def _extrapolated_difference(mesh, field, cell_grads, bc, tag, component,
                             step_of, method):
    """Shared core of FD2/FD3/FD_FAWC: move the cell value along its gradient
    to a probe point ``step`` above the face midpoint, then difference with
    the wall value over ``step``."""
    if field.mesh is not mesh:
        raise _err("mesh-mismatch", "field was sampled on a different mesh")
    if cell_grads.mesh is not mesh:
        raise _err("mesh-mismatch", "cell gradients belong to a different mesh")
    u = field.component(component)
    g = cell_grads.component(component)
    samples = []
    n_outside = 0
    for f, geom, cell in _tagged_faces(mesh, tag):
        h = step_of(f, geom, cell)
        probe = geom.midpoint + h * geom.unit_normal
        u_probe = float(u[cell]) + float(g[cell] @ (probe - mesh.centroids[cell]))
        ub = bc.value(component, geom.midpoint)
        outside = not _point_in_cell(mesh, cell, probe)
        n_outside += outside
        samples.append(WallSample(
            location=geom.midpoint.copy(), x_along_wall=float(geom.midpoint[0]),
            dudn=(u_probe - ub) / h, method=method, normal=geom.unit_normal,
            aux_step=h, outside_cell=outside))
    if n_outside:
        logger.info("%s: probe point outside the adjacent cell for %d of %d wall faces",
                    method.value, n_outside, len(samples))
    return samples


def wall_deriv_fd2(mesh: TriMesh, field: CellField, cell_grads: CellGradients,
                   bc: WallBC, tag: str, component: str = "u") -> list[WallSample]:
    """Gradient-extrapolated difference at the centroid height above each face
    midpoint; exact for affine fields."""
    def step_of(f, geom, cell):
        h = float(geom.unit_normal @ (mesh.centroids[cell] - geom.midpoint))
        if h <= 0.0:
            raise _err("nonpositive-height", f"face {f}: centroid height {h:.3e}")
        return h
    return _extrapolated_difference(mesh, field, cell_grads, bc, tag, component,
                                    step_of, Method.FD2)


def wall_deriv_fd3(mesh: TriMesh, field: CellField, cell_grads: CellGradients,
                   bc: WallBC, tag: str, step_rule: StepRule,
                   component: str = "u") -> list[WallSample]:
    """Gradient-extrapolated difference with the common step prescribed by
    ``step_rule``; the grid geometry no longer sets the step, so the
    derivative distribution stays smooth on irregular grids."""
    method = Method.FD3_ETA if step_rule.kind == "eta_profile" else Method.FD3_CONST

    def step_of(f, geom, cell):
        return step_length(step_rule, float(geom.midpoint[0]))
    return _extrapolated_difference(mesh, field, cell_grads, bc, tag, component,
                                    step_of, method)


def wall_deriv_fd_fawc(mesh: TriMesh, field: CellField, cell_grads: CellGradients,
                       bc: WallBC, tag: str, component: str = "u",
                       power: float = 2.0) -> list[WallSample]:
    """Gradient-extrapolated difference with the step set by the adjacent
    cell's face-area-weighted centroid height, a geometric stand-in for a
    common step that needs no flow-specific length scale."""
    def step_of(f, geom, cell):
        ref = mesh.face_area_weighted_centroid(cell, power=power)
        h = float(geom.unit_normal @ (ref - geom.midpoint))
        if h <= 0.0:
            raise _err("nonpositive-height", f"face {f}: weighted-centroid height {h:.3e}")
        return h
    return _extrapolated_difference(mesh, field, cell_grads, bc, tag, component,
                                    step_of, Method.FD_FAWC)
