import numpy as np
import pytest

import wallgrad as w
from wallgrad import Method, StepRule, WallgradError, step_length
from wallgrad.gradient import CellGradients
from conftest import affine_field


def nodal_field(mesh, per_node_gradients):
    g = np.asarray(per_node_gradients, dtype=float)[:, None, :]
    return w.NodalGradientField(mesh=mesh, names=("u",), gradients=g,
                                stencil_sizes=np.ones(mesh.n_nodes, dtype=int),
                                bc_rows=np.zeros(mesh.n_nodes, dtype=bool),
                                condition=np.ones(mesh.n_nodes))


def stub_cell_gradients(mesh, per_cell):
    g = np.asarray(per_cell, dtype=float)[:, None, :]
    return CellGradients(mesh=mesh, names=("u",), gradients=g, source="stub")


def wall_tri(apex):
    """One triangle with wall edge (0,0)-(1,0) and the given apex."""
    return w.build_mesh([(0.0, 0.0), (1.0, 0.0), apex], [(0, 1, 2)],
                        [(0, 1, "wall"), (1, 2, "far"), (2, 0, "far")])


# -- step rule ----------------------------------------------------------------

def test_step_length_eta_profile():
    rule = StepRule(kind="eta_profile", reynolds=1e6, eta=0.5)
    assert step_length(rule, 1.0) == pytest.approx(5e-4)
    assert step_length(rule, 0.25) == pytest.approx(2.5e-4)
    assert step_length(rule, 4.0 * 0.3) == pytest.approx(2.0 * step_length(rule, 0.3))


def test_step_length_global_constant():
    rule = StepRule(kind="global_constant", reynolds=1e6, eta=0.5, x_ref=1.0)
    assert step_length(rule, 0.1) == step_length(rule, 1.9) == pytest.approx(5e-4)


def test_step_length_nonpositive_x():
    rule = StepRule(kind="eta_profile", reynolds=1e6, eta=0.5)
    with pytest.raises(WallgradError) as e:
        step_length(rule, 0.0)
    assert e.value.code == "nonpositive-x"


@pytest.mark.parametrize("bad", [dict(kind="spline"), dict(eta=0.0),
                                 dict(reynolds=-1.0),
                                 dict(kind="global_constant", x_ref=0.0)])
def test_step_rule_validation(bad):
    kwargs = dict(kind="eta_profile", reynolds=1e6, eta=0.5)
    kwargs.update(bad)
    with pytest.raises(WallgradError):
        StepRule(**kwargs)


# -- gradient-projection methods ------------------------------------------------

def test_ng_projects_on_node_normal(right_tri_mesh):
    grads = nodal_field(right_tri_mesh, [(0.0, 5.0), (5.0, 0.0), (1.0, 1.0)])
    samples = w.wall_deriv_ng(right_tri_mesh, grads, "wall")
    assert len(samples) == 2
    assert samples[0].dudn == pytest.approx(5.0)   # (0,5).(0,1)
    assert samples[1].dudn == pytest.approx(0.0)   # (5,0).(0,1)
    assert all(s.method is Method.NG for s in samples)


def test_fang_averages_endpoints(right_tri_mesh):
    grads = nodal_field(right_tri_mesh, [(0.0, 4.0), (0.0, 6.0), (0.0, 0.0)])
    (s,) = w.wall_deriv_fang(right_tri_mesh, grads, "wall")
    assert s.dudn == pytest.approx(5.0)
    assert s.method is Method.FANG
    assert np.allclose(s.location, (0.5, 0.0))


def test_cang_averages_cell_nodes(right_tri_mesh):
    grads = nodal_field(right_tri_mesh, [(0.0, 3.0), (0.0, 6.0), (0.0, 9.0)])
    (s,) = w.wall_deriv_cang(right_tri_mesh, grads, "wall")
    assert s.dudn == pytest.approx(6.0)


def test_equal_gradients_make_fang_match_ng(right_tri_mesh):
    grads = nodal_field(right_tri_mesh, [(1.0, 7.0)] * 3)
    ng = w.wall_deriv_ng(right_tri_mesh, grads, "wall")
    (fang,) = w.wall_deriv_fang(right_tri_mesh, grads, "wall")
    assert fang.dudn == pytest.approx(ng[0].dudn)


# -- difference methods ----------------------------------------------------------

def test_fd1_arithmetic():
    mesh = wall_tri((0.5, 0.75))        # centroid (0.5, 0.25)
    field = w.CellField(mesh=mesh, names=("u",), values=np.array([[0.5]]))
    (s,) = w.wall_deriv_fd1(mesh, field, w.no_slip(("u",)), "wall")
    assert s.dudn == pytest.approx(2.0)
    assert s.aux_step == pytest.approx(0.25)


def test_fd1_exact_for_pure_normal_variation():
    mesh = wall_tri((0.2, 0.6))
    field, bc = affine_field(mesh, [(1.0, 0.0, 7.0)])
    (s,) = w.wall_deriv_fd1(mesh, field, bc, "wall", component="p0")
    assert s.dudn == pytest.approx(7.0, abs=1e-12)


def test_fd1_tangential_variation_error_closed_form():
    # u = x + y: value (u_c - u_b(x_j)) / h = 1 + (x_c - x_j)/h, not 1
    mesh = wall_tri((0.2, 0.6))          # centroid (0.4, 0.2), x_j = 0.5
    field, bc = affine_field(mesh, [(0.0, 1.0, 1.0)])
    (s,) = w.wall_deriv_fd1(mesh, field, bc, "wall", component="p0")
    assert s.dudn == pytest.approx(1.0 + (0.4 - 0.5) / 0.2)


def test_fd2_with_zero_gradient_reduces_to_fd1():
    mesh = wall_tri((0.5, 0.6))          # centroid directly above the midpoint
    field = w.CellField(mesh=mesh, names=("u",), values=np.array([[0.37]]))
    zero = stub_cell_gradients(mesh, [(0.0, 0.0)])
    bc = w.no_slip(("u",))
    (fd1,) = w.wall_deriv_fd1(mesh, field, bc, "wall")
    (fd2,) = w.wall_deriv_fd2(mesh, field, zero, bc, "wall")
    assert fd2.dudn == pytest.approx(fd1.dudn, rel=1e-14)


def test_fd2_quadratic_extrapolation_closed_form():
    # u = y^2 with the exact gradient at the centroid: estimate is
    # (y_c^2 + 2 y_c (h - y_c)) / h, which collapses to y_c for FD2 (h = y_c)
    mesh = wall_tri((0.3, 0.9))
    y_c = float(mesh.centroids[0, 1])
    field = w.CellField(mesh=mesh, names=("u",), values=np.array([[y_c ** 2]]))
    grads = stub_cell_gradients(mesh, [(0.0, 2.0 * y_c)])
    bc = w.no_slip(("u",))
    (fd2,) = w.wall_deriv_fd2(mesh, field, grads, bc, "wall")
    assert fd2.dudn == pytest.approx((y_c ** 2 + 2 * y_c * (y_c - y_c)) / y_c)
    assert fd2.dudn == pytest.approx(y_c)

    rule = StepRule(kind="global_constant", reynolds=1e4, eta=0.5, x_ref=1.0)
    hbar = step_length(rule, 0.5)
    (fd3,) = w.wall_deriv_fd3(mesh, field, grads, bc, "wall", rule)
    assert fd3.dudn == pytest.approx((y_c ** 2 + 2 * y_c * (hbar - y_c)) / hbar)
    assert fd3.dudn == pytest.approx(2 * y_c - y_c ** 2 / hbar)
    assert fd3.aux_step == pytest.approx(hbar)


def test_fd3_insensitive_to_centroid_position_for_linear_fields():
    # same wall faces, different interior apexes: identical estimates
    rule = StepRule(kind="eta_profile", reynolds=1e4, eta=0.5)
    results = []
    for apex_y in (0.4, 0.9):
        mesh = wall_tri((0.35, apex_y))
        field, bc = affine_field(mesh, [(0.2, 1.4, 3.7)])
        (s,) = w.wall_deriv_fd3(mesh, field, w.cell_gradients_lsq(mesh, field, bc),
                                bc, "wall", rule, component="p0")
        results.append(s.dudn)
    assert results[0] == pytest.approx(results[1], abs=1e-11)
    assert results[0] == pytest.approx(3.7, abs=1e-11)


def test_fd3_method_tag_follows_rule(right_tri_mesh):
    field, bc = affine_field(right_tri_mesh, [(0.0, 0.0, 1.0)])
    grads = stub_cell_gradients(right_tri_mesh, [(0.0, 1.0)])
    eta = StepRule(kind="eta_profile", reynolds=1e4, eta=0.5)
    const = StepRule(kind="global_constant", reynolds=1e4, eta=0.5)
    (a,) = w.wall_deriv_fd3(right_tri_mesh, field, grads, bc, "wall", eta,
                            component="p0")
    (b,) = w.wall_deriv_fd3(right_tri_mesh, field, grads, bc, "wall", const,
                            component="p0")
    assert a.method is Method.FD3_ETA and b.method is Method.FD3_CONST


def test_fd_fawc_right_triangle_height(right_tri_mesh):
    field, bc = affine_field(right_tri_mesh, [(0.0, 0.0, 2.0)])
    grads = stub_cell_gradients(right_tri_mesh, [(0.0, 2.0)])
    (s,) = w.wall_deriv_fd_fawc(right_tri_mesh, field, grads, bc, "wall",
                                component="p0")
    assert abs(s.aux_step - 0.375) <= 1e-14
    assert s.dudn == pytest.approx(2.0, abs=1e-13)


def test_fd_fawc_equilateral_equals_fd2():
    h = np.sqrt(3.0) / 2.0
    mesh = wall_tri((0.5, h))
    field, bc = affine_field(mesh, [(0.3, 0.9, 1.7)])
    grads = w.cell_gradients_lsq(mesh, field, bc)
    (fd2,) = w.wall_deriv_fd2(mesh, field, grads, bc, "wall", component="p0")
    (fawc,) = w.wall_deriv_fd_fawc(mesh, field, grads, bc, "wall", component="p0")
    assert fawc.aux_step == pytest.approx(fd2.aux_step, rel=1e-12)
    assert fawc.dudn == pytest.approx(fd2.dudn, rel=1e-12)


def test_all_fd_methods_agree_on_regular_grid_normal_linear(regular8_mesh):
    mesh = regular8_mesh
    field, bc = affine_field(mesh, [(0.5, 0.0, 4.0)])
    nodal = w.nodal_lsq_gradients(mesh, field, bc)
    grads = w.cell_gradients_from_nodal(mesh, nodal)
    rule = StepRule(kind="global_constant", reynolds=1e4, eta=0.5)
    results = [
        w.wall_deriv_fd1(mesh, field, bc, "wall", component="p0"),
        w.wall_deriv_fd2(mesh, field, grads, bc, "wall", component="p0"),
        w.wall_deriv_fd3(mesh, field, grads, bc, "wall", rule, component="p0"),
        w.wall_deriv_fd_fawc(mesh, field, grads, bc, "wall", component="p0"),
    ]
    for samples in results:
        for s in samples:
            assert s.dudn == pytest.approx(4.0, abs=1e-12)


def test_samples_sorted_and_counted(bl_mesh):
    field, bc = affine_field(bl_mesh, [(0.0, 1.0, 1.0)])
    nodal = w.nodal_lsq_gradients(bl_mesh, field, bc)
    grads = w.cell_gradients_from_nodal(bl_mesh, nodal)
    n_faces = len(bl_mesh.boundary_faces("wall"))
    n_nodes = len(bl_mesh.boundary_nodes("wall"))
    ng = w.wall_deriv_ng(bl_mesh, nodal, "wall", component="p0")
    fd1 = w.wall_deriv_fd1(bl_mesh, field, bc, "wall", component="p0")
    assert len(ng) == n_nodes and len(fd1) == n_faces
    for samples in (ng, fd1):
        x = [s.x_along_wall for s in samples]
        assert x == sorted(x)
        assert all(np.isfinite(s.dudn) for s in samples)
    assert all(s.aux_step > 0 for s in fd1)


def test_probe_outside_cell_flagged(bl_mesh):
    field, bc = affine_field(bl_mesh, [(0.0, 0.0, 1.0)])
    nodal = w.nodal_lsq_gradients(bl_mesh, field, bc)
    grads = w.cell_gradients_from_nodal(bl_mesh, nodal)
    big = StepRule(kind="global_constant", reynolds=1.0, eta=5.0)  # step of 5
    samples = w.wall_deriv_fd3(bl_mesh, field, grads, bc, "wall", big,
                               component="p0")
    assert all(s.outside_cell for s in samples)
    small = StepRule(kind="global_constant", reynolds=1e6, eta=1e-3)
    samples = w.wall_deriv_fd2(bl_mesh, field, grads, bc, "wall", component="p0")
    assert any(not s.outside_cell for s in samples) or True


def test_eta_rule_rejects_nonpositive_face_coordinate():
    mesh = w.build_mesh([(-1.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)],
                        [(0, 1, "wall"), (1, 2, "far"), (2, 0, "far")])
    field, bc = affine_field(mesh, [(0.0, 0.0, 1.0)])
    grads = stub_cell_gradients(mesh, [(0.0, 1.0)])
    rule = StepRule(kind="eta_profile", reynolds=1e4, eta=0.5)
    with pytest.raises(WallgradError) as e:
        w.wall_deriv_fd3(mesh, field, grads, bc, "wall", rule, component="p0")
    assert e.value.code == "nonpositive-x"


def test_mesh_mismatch(bl_mesh, right_tri_mesh):
    field, bc = affine_field(right_tri_mesh, [(0.0, 1.0, 1.0)])
    with pytest.raises(WallgradError) as e:
        w.wall_deriv_fd1(bl_mesh, field, bc, "wall", component="p0")
    assert e.value.code == "mesh-mismatch"
