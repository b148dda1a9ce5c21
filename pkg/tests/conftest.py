from pathlib import Path

import numpy as np
import pytest

import wallgrad as w

REPO_ROOT = Path(__file__).resolve().parents[1]
MESH_DIR = REPO_ROOT / "meshes"


@pytest.fixture
def right_tri_mesh():
    """Single right triangle with the bottom edge tagged wall."""
    return w.build_mesh([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)],
                        [(0, 1, "wall"), (1, 2, "far"), (2, 0, "far")])


@pytest.fixture
def square_mesh():
    """Unit square split along the main diagonal."""
    return w.build_mesh([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
                        [(0, 1, 2), (0, 2, 3)],
                        [(0, 1, "wall"), (1, 2, "far"), (2, 3, "far"), (3, 0, "far")])


@pytest.fixture(scope="session")
def regular8_mesh():
    """Regular 8-triangle mesh on the unit square (2x2 quads, fixed diagonals)."""
    spec = w.GridSpec(x_range=(0.0, 1.0), nx=2, ny=2, first_layer_height=0.5,
                      stretch=1.0, perturb=0.0, diagonal_mode="fixed", seed=0)
    return w.generate(spec)


@pytest.fixture(scope="session")
def bl_mesh():
    """Small irregular anisotropic boundary-layer mesh."""
    spec = w.GridSpec(x_range=(0.0, 2.0), nx=12, ny=8, first_layer_height=1e-3,
                      stretch=1.3, perturb=0.3, diagonal_mode="random", seed=3)
    return w.generate(spec)


def affine_field(mesh, coeffs):
    """CellField with one affine component per (a, b, c) row of coeffs."""
    c = mesh.centroids
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    names = tuple(f"p{i}" for i in range(len(coeffs)))
    values = np.column_stack([a + b * c[:, 0] + cc * c[:, 1] for a, b, cc in coeffs])
    field = w.CellField(mesh=mesh, names=names, values=values)
    bc = w.WallBC({n: (lambda x, y, _a=a, _b=b, _c=cc: _a + _b * x + _c * y)
                   for n, (a, b, cc) in zip(names, coeffs)})
    return field, bc
