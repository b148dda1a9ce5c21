import numpy as np
import pytest

import wallgrad as w
from wallgrad import WallgradError
from wallgrad.gradient import LsqOptions
from conftest import affine_field


def test_linear_exactness_on_seeded_meshes():
    rng = np.random.Generator(np.random.Philox(99))
    for seed in range(10):
        spec = w.GridSpec(x_range=(0.0, 2.0), nx=10, ny=6, first_layer_height=0.02,
                          stretch=1.25, perturb=0.3, diagonal_mode="random", seed=seed)
        mesh = w.generate(spec)
        coeffs = rng.uniform(-2.0, 2.0, size=(4, 3))
        field, bc = affine_field(mesh, coeffs)
        grads = w.nodal_lsq_gradients(mesh, field, bc)
        for k, name in enumerate(field.names):
            g = grads.component(name)
            err = np.abs(g - coeffs[k, 1:]).max()
            assert err < 1e-12, f"seed {seed} component {name}: {err:.2e}"


def test_quadratic_center_node_matches_brute_force(regular8_mesh):
    m = regular8_mesh
    field, bc = affine_field(m, [(0.0, 0.0, 0.0)])
    values = m.centroids[:, 1] ** 2
    field = w.CellField(mesh=m, names=("u",), values=values[:, None])
    grads = w.nodal_lsq_gradients(m, field, bc=None)
    node = int(np.argmin(np.abs(m.nodes - 0.5).sum(axis=1)))
    assert np.allclose(m.nodes[node], (0.5, 0.5))

    # independent weighted normal-equations solve over the same stencil
    cells = m.node_cells[node]
    cents = m.centroids[cells]
    d = cents - m.nodes[node]
    r = np.hypot(d[:, 0], d[:, 1])
    a = np.column_stack([np.ones(len(cells)), d[:, 0], d[:, 1]]) / np.sqrt(r)[:, None]
    b = (cents[:, 1] ** 2) / np.sqrt(r)
    expected = np.linalg.lstsq(a, b, rcond=None)[0]

    g = grads.component("u")[node]
    assert np.allclose(g, expected[1:], atol=1e-12)
    assert abs(g[1] - 1.0) <= r.max()     # gradient of y^2 at y = 0.5 is 1


def test_second_ring_augments_small_stencils(regular8_mesh):
    m = regular8_mesh
    field, bc = affine_field(m, [(1.0, 2.0, 3.0)])
    grads = w.nodal_lsq_gradients(m, field, bc=None)
    corner = int(np.argmin(m.nodes.sum(axis=1)))
    first_ring = len(m.node_cells[corner])
    assert first_ring < 4
    assert grads.stencil_sizes[corner] > first_ring
    assert np.allclose(grads.component("p0")[corner], (2.0, 3.0), atol=1e-12)


def test_rank_deficient_single_triangle_without_bc(right_tri_mesh):
    field, _ = affine_field(right_tri_mesh, [(0.0, 1.0, 1.0)])
    with pytest.raises(WallgradError) as e:
        w.nodal_lsq_gradients(right_tri_mesh, field, bc=None)
    assert e.value.code == "rank-deficient-stencil"


def test_bc_rows_rescue_rank():
    mesh = w.build_mesh([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)],
                        [(0, 1, "wall"), (1, 2, "wall"), (2, 0, "wall")])
    field, bc = affine_field(mesh, [(1.0, 2.0, 3.0)])
    grads = w.nodal_lsq_gradients(mesh, field, bc)
    for node in range(3):
        assert np.allclose(grads.component("p0")[node], (2.0, 3.0), atol=1e-12)
        assert grads.bc_rows[node]


def test_face_and_cell_average(right_tri_mesh):
    g = np.zeros((3, 1, 2))
    g[0, 0] = (0.0, 0.0)
    g[1, 0] = (4.0, 2.0)
    g[2, 0] = (2.0, 2.0)
    f = w.NodalGradientField(mesh=right_tri_mesh, names=("u",), gradients=g,
                             stencil_sizes=np.ones(3, dtype=int),
                             bc_rows=np.zeros(3, dtype=bool), condition=np.ones(3))
    assert np.allclose(w.face_average_gradient(f, 0, "u"), (2.0, 1.0))
    assert np.allclose(w.cell_average_gradient(f, 0, "u"), (2.0, 4.0 / 3.0))


def test_equal_endpoint_gradients_average_to_same(right_tri_mesh):
    g = np.broadcast_to(np.array([2.0, 3.0]), (3, 1, 2)).copy()
    f = w.NodalGradientField(mesh=right_tri_mesh, names=("u",), gradients=g,
                             stencil_sizes=np.ones(3, dtype=int),
                             bc_rows=np.zeros(3, dtype=bool), condition=np.ones(3))
    assert np.allclose(w.face_average_gradient(f, 0, "u"), (2.0, 3.0))
    assert np.allclose(w.cell_average_gradient(f, 0, "u"), (2.0, 3.0))


def test_scaling_by_power_of_two_is_exact(bl_mesh):
    field, bc = affine_field(bl_mesh, [(0.3, -1.7, 2.2)])
    g1 = w.nodal_lsq_gradients(bl_mesh, field, bc).gradients
    scaled = w.CellField(mesh=bl_mesh, names=field.names, values=4.0 * field.values)
    bc4 = w.WallBC({"p0": lambda x, y: 4.0 * (0.3 - 1.7 * x + 2.2 * y)})
    g4 = w.nodal_lsq_gradients(bl_mesh, scaled, bc4).gradients
    assert np.array_equal(g4, 4.0 * g1)


def test_translation_invariance_dyadic(regular8_mesh):
    m = regular8_mesh
    field, bc = affine_field(m, [(0.5, 1.25, -0.75)])
    g0 = w.nodal_lsq_gradients(m, field, bc=None).gradients
    shift = np.array([0.25, 0.75])
    moved = w.build_mesh(m.nodes + shift, m.tris,
                         list(zip(m.bface_nodes[:, 0], m.bface_nodes[:, 1], m.bface_tags)))
    vals = 0.5 + 1.25 * moved.centroids[:, 0] - 0.75 * moved.centroids[:, 1]
    # same point values expressed in shifted coordinates
    f2 = w.CellField(mesh=moved, names=("p0",), values=vals[:, None])
    g1 = w.nodal_lsq_gradients(moved, f2, bc=None).gradients
    assert np.allclose(g0, g1, atol=1e-10)


def test_weight_exponent_validation():
    with pytest.raises(WallgradError):
        LsqOptions(weight_exponent=3)


def test_mesh_mismatch(bl_mesh, right_tri_mesh):
    field, bc = affine_field(right_tri_mesh, [(0.0, 1.0, 1.0)])
    with pytest.raises(WallgradError) as e:
        w.nodal_lsq_gradients(bl_mesh, field, bc)
    assert e.value.code == "mesh-mismatch"


def test_cell_gradients_from_nodal(right_tri_mesh):
    g = np.zeros((3, 1, 2))
    g[0, 0] = (3.0, 0.0)
    g[1, 0] = (0.0, 3.0)
    g[2, 0] = (3.0, 3.0)
    f = w.NodalGradientField(mesh=right_tri_mesh, names=("u",), gradients=g,
                             stencil_sizes=np.ones(3, dtype=int),
                             bc_rows=np.zeros(3, dtype=bool), condition=np.ones(3))
    cg = w.cell_gradients_from_nodal(right_tri_mesh, f)
    assert np.allclose(cg.component("u")[0], (2.0, 2.0))
    assert cg.source == "nodal_average"


def test_cell_gradients_lsq_linear_exact(bl_mesh):
    field, bc = affine_field(bl_mesh, [(0.1, 0.8, -1.3)])
    cg = w.cell_gradients_lsq(bl_mesh, field, bc)
    assert np.abs(cg.component("p0") - np.array([0.8, -1.3])).max() < 1e-10
    assert cg.source == "cell_lsq"


def test_cell_gradients_lsq_rank_deficient(right_tri_mesh):
    field, _ = affine_field(right_tri_mesh, [(0.0, 1.0, 1.0)])
    with pytest.raises(WallgradError) as e:
        w.cell_gradients_lsq(right_tri_mesh, field, bc=None)
    assert e.value.code == "rank-deficient-stencil"


def test_condition_metadata(bl_mesh):
    field, bc = affine_field(bl_mesh, [(0.0, 1.0, 1.0)])
    grads = w.nodal_lsq_gradients(bl_mesh, field, bc)
    assert np.all(np.isfinite(grads.condition))
    assert np.all(grads.condition >= 1.0)
    assert np.all(grads.stencil_sizes >= 3)
