"""Triangular-mesh data model: connectivity, derived geometry, and text I/O.

A :class:`TriMesh` is immutable after construction and safe for concurrent
read-only use.  All derived geometry (cell centroids, boundary-face normals,
node normals, face-area-weighted centroids) is exposed through methods on it.
Boundary edges carry string tags; the same mesh can host several tagged
boundaries (e.g. ``wall`` and ``far``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import WallgradError

# A triangle whose area is below this fraction of (longest edge)^2 is rejected
# as degenerate at build time.
_AREA_REL_TOL = 1e-14


def _err(code: str, detail: str) -> WallgradError:
    return WallgradError("mesh", code, detail)


@dataclass(frozen=True)
class FaceGeom:
    """Geometry of one boundary face.

    ``unit_normal`` points from the face into the interior of the domain
    (towards the adjacent cell centroid); ``length`` is the edge length.
    """

    midpoint: np.ndarray
    unit_normal: np.ndarray
    length: float


@dataclass(frozen=True)
class NodeNormal:
    """Interior-pointing unit normal at a boundary node."""

    node: int
    unit_normal: np.ndarray


class TriMesh:
    """2D triangular mesh with tagged boundary edges and full adjacency.

    Construct through :func:`build_mesh` (or :func:`read_mesh`); the
    constructor assumes pre-validated arrays.
    """

    def __init__(self, nodes, tris, bface_nodes, bface_tags, bface_cell,
                 node_cells, cell_neighbors):
        self.nodes = nodes
        self.tris = tris
        self.bface_nodes = bface_nodes
        self.bface_tags = tuple(bface_tags)
        self.bface_cell = bface_cell
        self.node_cells = node_cells
        self.cell_neighbors = cell_neighbors
        for a in (self.nodes, self.tris, self.bface_nodes, self.bface_cell,
                  self.cell_neighbors):
            a.setflags(write=False)
        self._centroids = None
        self._areas = None
        self._bface_geoms: list[FaceGeom | None] = [None] * len(bface_nodes)
        self._tag_faces: dict[str, np.ndarray] = {}
        self._tag_node_faces: dict[str, dict[int, list[int]]] = {}

    # -- sizes ------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.tris)

    @property
    def n_bfaces(self) -> int:
        return len(self.bface_nodes)

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.bface_tags)))

    # -- derived geometry --------------------------------------------------

    @property
    def centroids(self) -> np.ndarray:
        """Cell centroids, shape (n_cells, 2)."""
        if self._centroids is None:
            c = self.nodes[self.tris].mean(axis=1)
            c.setflags(write=False)
            self._centroids = c
        return self._centroids

    @property
    def areas(self) -> np.ndarray:
        """Signed (positive) triangle areas, shape (n_cells,)."""
        if self._areas is None:
            a = _signed_areas(self.nodes, self.tris)
            a.setflags(write=False)
            self._areas = a
        return self._areas

    def cell_centroid(self, cell: int) -> np.ndarray:
        """Arithmetic mean of the cell's three vertices."""
        return self.centroids[cell]

    def bface_geom(self, bface: int) -> FaceGeom:
        """Midpoint, interior-pointing unit normal, and length of a boundary face."""
        cached = self._bface_geoms[bface]
        if cached is not None:
            return cached
        a, b = self.bface_nodes[bface]
        pa, pb = self.nodes[a], self.nodes[b]
        t = pb - pa
        length = float(np.hypot(t[0], t[1]))
        normal = np.array([-t[1], t[0]]) / length + 0.0  # +0.0 clears negative zeros
        midpoint = 0.5 * (pa + pb)
        centroid = self.centroids[self.bface_cell[bface]]
        if float(normal @ (centroid - midpoint)) < 0.0:
            normal = -normal
        normal.setflags(write=False)
        midpoint.setflags(write=False)
        geom = FaceGeom(midpoint=midpoint, unit_normal=normal, length=length)
        self._bface_geoms[bface] = geom
        return geom

    def boundary_faces(self, tag: str) -> np.ndarray:
        """Indices of boundary faces carrying ``tag``."""
        if tag not in self._tag_faces:
            idx = np.array([i for i, t in enumerate(self.bface_tags) if t == tag],
                           dtype=np.int64)
            idx.setflags(write=False)
            self._tag_faces[tag] = idx
        return self._tag_faces[tag]

    def boundary_nodes(self, tag: str) -> np.ndarray:
        """Sorted unique node indices lying on ``tag`` boundary faces."""
        faces = self.boundary_faces(tag)
        return np.unique(self.bface_nodes[faces])

    def node_normal(self, node: int, tag: str) -> NodeNormal:
        """Length-weighted average of incident tagged face normals, renormalized.

        On a straight wall this reduces to the shared face normal exactly.
        """
        incident = self._node_faces(tag).get(int(node))
        if not incident:
            raise _err("node-not-on-tagged-boundary",
                       f"node {node} lies on no boundary face tagged {tag!r}")
        acc = np.zeros(2)
        for f in incident:
            g = self.bface_geom(f)
            acc += g.length * g.unit_normal
        norm = float(np.hypot(acc[0], acc[1]))
        if norm == 0.0:
            raise _err("node-not-on-tagged-boundary",
                       f"incident {tag!r} face normals at node {node} cancel")
        n = acc / norm
        n.setflags(write=False)
        return NodeNormal(node=int(node), unit_normal=n)

    def face_area_weighted_centroid(self, cell: int, power: float = 2.0) -> np.ndarray:
        """Cell reference point weighting edge midpoints by normalized edge
        lengths raised to ``power``.

        With ``power = 0`` this is the plain centroid; the default ``power = 2``
        biases the point towards the longest edges, which evens out its height
        above a wall on anisotropic cells.
        """
        v = self.nodes[self.tris[cell]]
        mids = 0.5 * (v + np.roll(v, -1, axis=0))
        lengths = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        w = (lengths / lengths.max()) ** power
        return (w @ mids) / w.sum()

    def _node_faces(self, tag: str) -> dict[int, list[int]]:
        if tag not in self._tag_node_faces:
            mapping: dict[int, list[int]] = {}
            for f in self.boundary_faces(tag):
                for n in self.bface_nodes[f]:
                    mapping.setdefault(int(n), []).append(int(f))
            self._tag_node_faces[tag] = mapping
        return self._tag_node_faces[tag]


def _signed_areas(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    v = nodes[tris]
    d1 = v[:, 1] - v[:, 0]
    d2 = v[:, 2] - v[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_mesh(nodes, tris, bfaces) -> TriMesh:
    """Validate raw arrays, build adjacency, and return an immutable TriMesh.

    Triangles given clockwise are silently reoriented counterclockwise.
    Raises on duplicate triangles, zero-area triangles, boundary faces that do
    not match a unique triangle edge, untagged boundary edges, and non-chain
    tagged boundaries.
    """
    nodes = np.array(nodes, dtype=np.float64)
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise _err("bad-nodes", f"expected (n, 2) node coordinates, got shape {nodes.shape}")
    tris_arr = np.array(tris, dtype=np.int64)
    if tris_arr.size == 0:
        raise _err("no-cells", "mesh has no triangles")
    if tris_arr.ndim != 2 or tris_arr.shape[1] != 3:
        raise _err("bad-cells", f"expected (n, 3) triangle indices, got shape {tris_arr.shape}")
    n = len(nodes)
    if tris_arr.min() < 0 or tris_arr.max() >= n:
        bad = int(np.argmax((tris_arr < 0).any(axis=1) | (tris_arr >= n).any(axis=1)))
        raise _err("index-out-of-range",
                   f"triangle {bad} references a node outside [0, {n})")

    # reorient clockwise triangles, then reject degenerate ones
    signed = _signed_areas(nodes, tris_arr)
    flip = signed < 0.0
    if flip.any():
        tris_arr[flip] = tris_arr[flip][:, [0, 2, 1]]
        signed = np.abs(signed)
    edge_vecs = nodes[np.roll(tris_arr, -1, axis=1)] - nodes[tris_arr]
    longest_sq = (edge_vecs ** 2).sum(axis=2).max(axis=1)
    degenerate = signed <= _AREA_REL_TOL * longest_sq
    if degenerate.any():
        raise _err("zero-area-triangle",
                   f"triangle {int(np.argmax(degenerate))} is degenerate")

    seen: dict[frozenset, int] = {}
    for i, row in enumerate(tris_arr):
        key = frozenset(int(x) for x in row)
        if len(key) < 3:
            raise _err("zero-area-triangle", f"triangle {i} repeats a vertex")
        if key in seen:
            raise _err("duplicate-triangle", f"triangles {seen[key]} and {i} are identical")
        seen[key] = i

    # edge -> adjacent cells; detect non-manifold connectivity
    edge_cells: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for c, row in enumerate(tris_arr):
        for k in range(3):
            a, b = int(row[k]), int(row[(k + 1) % 3])
            key = (a, b) if a < b else (b, a)
            lst = edge_cells.setdefault(key, [])
            lst.append((c, k))
            if len(lst) > 2:
                raise _err("nonmanifold-edge", f"edge {key} belongs to more than two triangles")

    bface_nodes = []
    bface_tags = []
    bface_cell = []
    listed: set[tuple[int, int]] = set()
    for i, (a, b, tag) in enumerate(bfaces):
        a, b = int(a), int(b)
        if not (0 <= a < n and 0 <= b < n):
            raise _err("index-out-of-range", f"boundary face {i} references a node outside [0, {n})")
        if a == b:
            raise _err("dangling-boundary-face", f"boundary face {i} has zero length")
        key = (a, b) if a < b else (b, a)
        cells = edge_cells.get(key)
        if cells is None:
            raise _err("dangling-boundary-face",
                       f"boundary face {i} ({a}, {b}) is not an edge of any triangle")
        if len(cells) != 1:
            raise _err("dangling-boundary-face",
                       f"boundary face {i} ({a}, {b}) is an interior edge")
        if key in listed:
            raise _err("dangling-boundary-face", f"boundary face {i} ({a}, {b}) listed twice")
        listed.add(key)
        bface_nodes.append((a, b))
        bface_tags.append(str(tag))
        bface_cell.append(cells[0][0])

    uncovered = [e for e, cells in edge_cells.items() if len(cells) == 1 and e not in listed]
    if uncovered:
        raise _err("missing-boundary-face",
                   f"{len(uncovered)} boundary edge(s) carry no tag, first {uncovered[0]}")

    # tagged boundaries must form chains: no node with >2 same-tag faces
    degree: dict[tuple[str, int], int] = {}
    for (a, b), tag in zip(bface_nodes, bface_tags):
        for x in (a, b):
            key = (tag, x)
            degree[key] = degree.get(key, 0) + 1
            if degree[key] > 2:
                raise _err("broken-tag-chain",
                           f"node {x} belongs to more than two {tag!r} faces")

    node_cells_lists: list[list[int]] = [[] for _ in range(n)]
    for c, row in enumerate(tris_arr):
        for v in row:
            node_cells_lists[int(v)].append(c)
    node_cells = tuple(np.array(lst, dtype=np.int64) for lst in node_cells_lists)

    neighbors = np.full((len(tris_arr), 3), -1, dtype=np.int64)
    for cells in edge_cells.values():
        if len(cells) == 2:
            (c0, k0), (c1, k1) = cells
            neighbors[c0, k0] = c1
            neighbors[c1, k1] = c0

    return TriMesh(nodes=nodes, tris=tris_arr,
                   bface_nodes=np.array(bface_nodes, dtype=np.int64).reshape(-1, 2),
                   bface_tags=bface_tags,
                   bface_cell=np.array(bface_cell, dtype=np.int64),
                   node_cells=node_cells, cell_neighbors=neighbors)


# -- text I/O ---------------------------------------------------------------
#
# Format (UTF-8):
#   trimesh v1
#   <nnodes> <ntris> <nbfaces>
#   x y          (nnodes lines, full-precision decimal)
#   i j k        (ntris lines, 0-based)
#   a b tag      (nbfaces lines)

_MAGIC = "trimesh v1"


def write_mesh(mesh: TriMesh, path) -> None:
    """Write a mesh in the plain-text v1 format; round-trips bit-exactly."""
    for tag in mesh.bface_tags:
        if not tag or any(ch.isspace() for ch in tag):
            raise _err("bad-tag", f"tag {tag!r} is empty or contains whitespace")
    lines = [_MAGIC, f"{mesh.n_nodes} {mesh.n_cells} {mesh.n_bfaces}"]
    for x, y in mesh.nodes:
        lines.append(f"{float(x)!r} {float(y)!r}")
    for i, j, k in mesh.tris:
        lines.append(f"{i} {j} {k}")
    for (a, b), tag in zip(mesh.bface_nodes, mesh.bface_tags):
        lines.append(f"{a} {b} {tag}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def mesh_to_bytes(mesh: TriMesh) -> bytes:
    """Serialized form of the mesh, byte-identical for identical meshes."""
    lines = [_MAGIC, f"{mesh.n_nodes} {mesh.n_cells} {mesh.n_bfaces}"]
    for x, y in mesh.nodes:
        lines.append(f"{float(x)!r} {float(y)!r}")
    for i, j, k in mesh.tris:
        lines.append(f"{i} {j} {k}")
    for (a, b), tag in zip(mesh.bface_nodes, mesh.bface_tags):
        lines.append(f"{a} {b} {tag}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_mesh(path) -> TriMesh:
    """Parse a plain-text v1 mesh file; errors name the offending line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _err("parse-error", f"{path}: {e}") from e
    lines = text.splitlines()

    def fail(lineno: int, msg: str) -> WallgradError:
        return _err("parse-error", f"{path}:{lineno}: {msg}")

    if not lines or lines[0].strip() != _MAGIC:
        got = lines[0].strip() if lines else "<empty file>"
        raise _err("version-mismatch", f"{path}:1: expected {_MAGIC!r}, got {got!r}")
    if len(lines) < 2:
        raise fail(2, "missing size header")
    parts = lines[1].split()
    if len(parts) != 3:
        raise fail(2, "size header must be '<nnodes> <ntris> <nbfaces>'")
    try:
        nn, nt, nb = (int(p) for p in parts)
    except ValueError:
        raise fail(2, "size header must contain three integers") from None
    if nt == 0:
        raise _err("no-cells", f"{path}:2: mesh declares zero triangles")
    expected = 2 + nn + nt + nb
    if len([ln for ln in lines if ln.strip()]) < expected:
        raise fail(len(lines), f"expected {expected} non-empty lines, found fewer")

    nodes = np.empty((nn, 2))
    for i in range(nn):
        lineno = 3 + i
        parts = lines[2 + i].split()
        if len(parts) != 2:
            raise fail(lineno, "node line must be 'x y'")
        try:
            nodes[i] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise fail(lineno, f"bad coordinate in {lines[2 + i]!r}") from None

    tris = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        lineno = 3 + nn + i
        parts = lines[2 + nn + i].split()
        if len(parts) != 3:
            raise fail(lineno, "triangle line must be 'i j k'")
        try:
            tris[i] = [int(p) for p in parts]
        except ValueError:
            raise fail(lineno, f"bad index in {lines[2 + nn + i]!r}") from None
        for v in tris[i]:
            if not (0 <= v < nn):
                raise fail(lineno, f"triangle references node {int(v)} of {nn}")

    bfaces = []
    for i in range(nb):
        lineno = 3 + nn + nt + i
        parts = lines[2 + nn + nt + i].split()
        if len(parts) != 3:
            raise fail(lineno, "boundary face line must be 'a b tag'")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise fail(lineno, f"bad index in {lines[2 + nn + nt + i]!r}") from None
        for v in (a, b):
            if not (0 <= v < nn):
                raise fail(lineno, f"boundary face references node {v} of {nn}")
        bfaces.append((a, b, parts[2]))

    return build_mesh(nodes, tris, bfaces)
