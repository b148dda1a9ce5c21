import numpy as np
import pytest

import wallgrad as w
from wallgrad import WallgradError
from wallgrad.mesh import mesh_to_bytes


def spec_2x2():
    return w.GridSpec(x_range=(0.0, 1.0), nx=2, ny=2, first_layer_height=0.5,
                      stretch=1.0, perturb=0.0, diagonal_mode="fixed", seed=0)


def test_regular_2x2_is_the_unique_8_triangle_mesh():
    m = w.generate(spec_2x2())
    assert m.n_nodes == 9 and m.n_cells == 8 and m.n_bfaces == 8
    xs = [0.0, 0.5, 1.0]
    expected = np.array([(x, y) for y in xs for x in xs])
    assert np.array_equal(m.nodes, expected)
    assert np.allclose(m.areas, 0.125)
    assert sum(1 for t in m.bface_tags if t == "wall") == 2


def test_same_seed_bit_identical():
    spec = w.GridSpec(nx=16, ny=8, perturb=0.3, diagonal_mode="random", seed=123)
    a = mesh_to_bytes(w.generate(spec))
    b = mesh_to_bytes(w.generate(spec))
    assert a == b
    other = w.GridSpec(nx=16, ny=8, perturb=0.3, diagonal_mode="random", seed=124)
    assert mesh_to_bytes(w.generate(other)) != a


def test_perturbed_grid_valid_and_wall_exact():
    spec = w.GridSpec(nx=64, ny=16, first_layer_height=1e-3, stretch=1.2,
                      perturb=0.3, diagonal_mode="random", seed=5)
    m = w.generate(spec)
    assert m.areas.min() > 0
    wall_nodes = m.boundary_nodes("wall")
    assert np.all(m.nodes[wall_nodes, 1] == 0.0)   # bit-exact, not a tolerance
    assert m.nodes[:, 0].min() == 0.0 and m.nodes[:, 0].max() == 2.0


@pytest.mark.parametrize("mode", ["fixed", "alternating", "random"])
def test_diagonal_modes_produce_valid_meshes(mode):
    spec = w.GridSpec(nx=8, ny=4, first_layer_height=0.05, stretch=1.1,
                      perturb=0.2, diagonal_mode=mode, seed=2)
    m = w.generate(spec)
    assert m.n_cells == 2 * 8 * 4
    assert m.areas.min() > 0


def test_positive_areas_across_seeds():
    for seed in range(20):
        spec = w.GridSpec(nx=10, ny=6, first_layer_height=1e-3, stretch=1.3,
                          perturb=0.45, diagonal_mode="random", seed=seed)
        assert w.generate(spec).areas.min() > 0


def test_profile_regular_grid_constant_heights():
    m = w.generate(spec_2x2())
    prof = w.centroid_height_profile(m, "wall")
    heights = np.array([h for _, h in prof])
    assert heights.min() > 0
    assert np.ptp(heights) <= 1e-14


def test_profile_perturbed_grid_varies():
    # regression threshold frozen from measurement on the default generator
    # (observed 0.075..0.095 across seeds at perturb = 0.3)
    spec = w.GridSpec(perturb=0.3, diagonal_mode="random", seed=0)
    prof = w.centroid_height_profile(w.generate(spec), "wall")
    heights = np.array([h for _, h in prof])
    assert heights.min() > 0
    cv = heights.std() / heights.mean()
    assert cv > 0.06


def test_profile_sorted_by_x():
    spec = w.GridSpec(nx=16, ny=4, first_layer_height=0.01, perturb=0.3,
                      diagonal_mode="random", seed=1)
    prof = w.centroid_height_profile(w.generate(spec), "wall")
    x = np.array([p[0] for p in prof])
    assert np.all(np.diff(x) > 0)


def test_unknown_tag_errors():
    m = w.generate(spec_2x2())
    with pytest.raises(WallgradError) as e:
        w.centroid_height_profile(m, "lid")
    assert e.value.code == "unknown-tag"


@pytest.mark.parametrize("bad", [
    dict(perturb=0.5),
    dict(perturb=-0.1),
    dict(stretch=0.9),
    dict(nx=0),
    dict(first_layer_height=0.0),
    dict(diagonal_mode="zigzag"),
    dict(x_range=(1.0, 1.0)),
])
def test_bad_specs_rejected(bad):
    spec = w.GridSpec(**{**dict(nx=4, ny=4, first_layer_height=0.1), **bad})
    with pytest.raises(WallgradError) as e:
        w.generate(spec)
    assert e.value.code == "bad-spec"
