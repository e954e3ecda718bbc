import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eigenbound.errors import IllPosedRatioError, ParameterError
from eigenbound.material import (
    CLOSED_FORM, CONSTANT, ELEMENT_CONSTANT, RobinField, constant_field, cos_range, element_field,
    example_field, example_robin, load_field_json, robin_ratio_extremes, sign, sin_range,
    sin_signs, voigt_cubic, voigt_isotropic,
)
from eigenbound.mesh import ROBIN, build_uniform_quad_mesh

# exact values from tools/derive_oracles.py: c11 = 10/9, c12 = 5/18, c44 = 5/12 at E=1, nu=0.2
C11, C12, C44 = 10 / 9, 5 / 18, 5 / 12


def test_voigt_nu_zero_plane_strain():
    np.testing.assert_array_equal(voigt_isotropic(1.0, 0.0, 2), np.diag([1.0, 1.0, 0.5]))


def test_voigt_nu_02_plane_strain():
    expected = np.array([[C11, C12, 0.0], [C12, C11, 0.0], [0.0, 0.0, C44]])
    np.testing.assert_allclose(voigt_isotropic(1.0, 0.2, 2), expected, rtol=1e-15)


def test_voigt_nu_02_3d_cubic_pattern():
    C = voigt_isotropic(1.0, 0.2, 3)
    assert C.shape == (6, 6)
    np.testing.assert_allclose(np.diag(C)[:3], C11, rtol=1e-15)
    np.testing.assert_allclose(np.diag(C)[3:], C44, rtol=1e-15)
    off = C[:3, :3][~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, C12, rtol=1e-15)
    assert np.all(C[:3, 3:] == 0) and np.all(C[3:, 3:][~np.eye(3, dtype=bool)] == 0)


def test_voigt_cubic_2d_layout():
    np.testing.assert_array_equal(voigt_cubic(3.0, 1.0, 0.5, 2),
                                  [[3.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 0.5]])


@pytest.mark.parametrize("nu", [-1.0, 0.5, 0.7, float("nan")])
def test_voigt_bad_poisson_ratio(nu):
    with pytest.raises(ParameterError):
        voigt_isotropic(1.0, nu, 2)


@pytest.mark.parametrize("d", [2, 3])
def test_voigt_positive_definite_on_nu_grid(d):
    for nu in np.linspace(-0.999, 0.499, 200):
        assert np.linalg.eigvalsh(voigt_isotropic(1.0, nu, d))[0] > 0


# -- example fields -----------------------------------------------------------------

def test_atilde2_is_constant():
    f = example_field("ex41-Atilde2")
    pts = np.random.default_rng(0).uniform(-3, 3, (10, 2))
    np.testing.assert_array_equal(f(pts), np.broadcast_to([[1.0, 0.3], [0.3, 1.0]], (10, 2, 2)))


def test_ex41_a_upper_half_cos_one():
    f = example_field("ex41-A")
    np.testing.assert_allclose(f([[0.0, 1.0]])[0], [[1.3, 0.4], [0.4, 1.3]], rtol=1e-15)


def test_ex41_a_lower_half():
    f = example_field("ex41-A")
    np.testing.assert_allclose(f([[math.pi, -1.0]])[0], [[0.7, 0.2], [0.2, 0.7]], rtol=1e-15)


def test_ex46_a_at_centre():
    f = example_field("ex46-A")
    np.testing.assert_allclose(f([[0.5, 0.5]])[0], math.sin(1.0) * np.eye(2), rtol=1e-15)


def test_unknown_example_field():
    with pytest.raises(KeyError):
        example_field("ex99-A")


def test_sign_of_zero_is_plus_one():
    assert sign(0.0) == 1.0 and sign(-0.0) == 1.0 and sign(-1e-300) == -1.0


@pytest.mark.parametrize("name", ["ex41-A", "ex45-C", "ex46-A"])
def test_range_vertices_contain_samples(name):
    """Range vertices are symmetric and their extreme eigenvalues enclose sampled values."""
    f = example_field(name)
    domain = ((0.0, 1.0), (0.0, 1.0)) if name == "ex46-A" else ((-math.pi, math.pi),) * 2
    mesh = build_uniform_quad_mesh(domain, 7)
    rng = np.random.default_rng(3)
    for j in range(mesh.n_elements):
        V, certified = f.element_range(mesh, j)
        assert certified
        assert np.all(V == np.swapaxes(V, 1, 2))
        lo = min(np.linalg.eigvalsh(v)[0] for v in V)
        hi = max(np.linalg.eigvalsh(v)[-1] for v in V)
        c = mesh.element_coords(j)
        u = rng.uniform(0, 1, (20, 2))
        pts = c[0] + np.outer(u[:, 0], c[1] - c[0]) + np.outer(u[:, 1], c[3] - c[0])
        for m in f(pts):
            w = np.linalg.eigvalsh(m)
            assert lo - 1e-14 <= w[0] and w[-1] <= hi + 1e-14


@pytest.mark.parametrize("name", ["ex41-A", "ex45-C", "ex41-Atilde2", "ex45-Ctilde1"])
def test_example_fields_uniformly_bounded(name):
    f = example_field(name)
    pts = np.random.default_rng(1).uniform(-math.pi, math.pi, (500, 2))
    w = np.linalg.eigvalsh(f(pts))
    assert w.min() > 0.1 and w.max() < 10.0
    assert np.all(f(pts) == np.swapaxes(f(pts), 1, 2))


def test_one_dimensional_ranges():
    assert cos_range(-0.5, 0.5) == (math.cos(0.5), 1.0)
    lo, hi = sin_range(0.0, 2.0)
    assert lo == 0.0 and hi == 1.0
    assert sin_signs(0.0, math.pi) == [1.0]
    assert sin_signs(-1.0, 1.0) == [-1.0, 1.0]


# -- fields from data --------------------------------------------------------------

def test_load_element_constant_json():
    text = json.dumps({"kind": "element_constant", "d": 2,
                       "values": [[[2, 0], [0, 1]], [[1, 0.5], [0.5, 1]]]})
    f = load_field_json(text)
    assert f.kind == ELEMENT_CONSTANT and f.size == 2
    np.testing.assert_array_equal(f([[0, 0]], [1])[0], [[1, 0.5], [0.5, 1]])


def test_load_constant_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"kind": "constant", "d": 2, "value": [[1, 0], [0, 3]]}))
    f = load_field_json(path)
    assert f.kind == CONSTANT
    np.testing.assert_array_equal(f.value, [[1, 0], [0, 3]])


@pytest.mark.parametrize("spec", [
    {"kind": "constant", "d": 3, "value": [[1, 0], [0, 1]]},
    {"kind": "polynomial", "d": 2},
    {"kind": "constant", "d": 2, "value": [[1, 2], [2, 1]]},
    {"kind": "constant", "d": 2, "value": [[1, 0.1], [0, 1]]},
])
def test_load_json_rejects_bad_fields(spec):
    with pytest.raises(ParameterError):
        load_field_json(spec)


def test_scaled_field():
    f = example_field("ex41-A").scaled(2.0)
    g = example_field("ex41-A")
    pts = [[0.1, 0.2], [-1.0, -2.0]]
    np.testing.assert_array_equal(f(pts), 2.0 * g(pts))
    assert element_field([np.eye(2)]).scaled(3.0).values[0, 0, 0] == 3.0


# -- Robin ratios ----------------------------------------------------------------------

@pytest.fixture
def robin_mesh():
    return build_uniform_quad_mesh(((0.0, 1.0), (0.0, 1.0)), 3, {"right": ROBIN})


def test_identical_robin_fields_give_one(robin_mesh):
    g = example_robin("ex41c-g3")
    for edge in robin_mesh.edges_with_tag(ROBIN):
        assert robin_ratio_extremes(g, g, robin_mesh, edge) == (1.0, 1.0)


def test_proportional_robin_fields(robin_mesh):
    gt = RobinField(CLOSED_FORM, func=lambda x: 1.0 + x[:, 1] ** 2)
    g = RobinField(CLOSED_FORM, func=lambda x: 2.0 * (1.0 + x[:, 1] ** 2))
    for edge in robin_mesh.edges_with_tag(ROBIN):
        lo, hi = robin_ratio_extremes(g, gt, robin_mesh, edge)
        assert lo == pytest.approx(2.0, rel=1e-15) and hi == pytest.approx(2.0, rel=1e-15)


def test_zero_robin_gives_none(robin_mesh):
    g0 = RobinField(CONSTANT, value=0.0)
    gt = RobinField(CONSTANT, value=1.0)
    edge = robin_mesh.edges_with_tag(ROBIN)[0]
    assert robin_ratio_extremes(g0, gt, robin_mesh, edge) is None
    assert robin_ratio_extremes(None, gt, robin_mesh, edge) is None


def test_ill_posed_ratio(robin_mesh):
    edge = robin_mesh.edges_with_tag(ROBIN)[0]
    with pytest.raises(IllPosedRatioError):
        robin_ratio_extremes(RobinField(CONSTANT, value=1.0), RobinField(CONSTANT, value=0.0),
                             robin_mesh, edge)


def test_negative_robin_rejected():
    with pytest.raises(ParameterError):
        RobinField(CONSTANT, value=-1.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
def test_constant_field_rejects_indefinite(vals):
    a, b, c = vals
    m = np.array([[a, b], [b, c]])
    if np.linalg.eigvalsh(m)[0] <= 0:
        with pytest.raises(ParameterError):
            constant_field(m)
    else:
        assert constant_field(m).size == 2
