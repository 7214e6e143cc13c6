import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import hyp2f1

from hypersingular.dyadic import COMMON_BOX_CONSTANT, SHIFTED, STANDARD
from hypersingular.grids import AnnulusGrid, CubeGrid, GridFunction, make_polar_grid
from hypersingular.operators import (OperatorSpec, QuadratureWarning, ResolutionError, apply_maximal,
                                     apply_sparse, apply_sparse_layer, bergman_at, boxes_node_mask,
                                     level_set_decomposition, resolvable_level, sparse_domination_check,
                                     sparse_kernel_matrix)
from hypersingular.sparse import GradedSparseFamily, family_carleson, family_counterexample, family_full_tree

T = 1.25


def _brute_maximal(system, t, f, max_level):
    """Max over boxes containing each node, box integrals summed node by node."""
    g = f.grid
    out = np.zeros(g.size)
    for k in range(max_level + 1):
        ell = 2.0**-k
        arcs = system.indices(g.angle, k)
        for m in range(2**k):
            inside = (g.radius >= 1 - ell) & (arcs == m)
            avg = np.sum(np.abs(f.values[inside]) * g.weights[inside]) / (ell * ell * (2 - ell)) ** t
            out[inside] = np.maximum(out[inside], avg)
    return out


@pytest.mark.parametrize("system", [STANDARD, SHIFTED])
def test_maximal_matches_brute_force(system):
    g = make_polar_grid(24, 48, 1 - 2**-6, "geometric")
    rng = np.random.default_rng(7)
    f = GridFunction(g, rng.random(g.size))
    L = resolvable_level(g, system)
    M = apply_maximal(system, T, f)
    assert M.meta["max_level"] == L
    np.testing.assert_allclose(M.values, _brute_maximal(system, T, f, L), rtol=1e-12)


def test_maximal_resolution_error():
    g = make_polar_grid(16, 16, 0.9)
    L = resolvable_level(g)
    with pytest.raises(ResolutionError, match="nodes"):
        apply_maximal("standard", T, GridFunction.constant(g), max_level=L + 1)


def test_maximal_annulus_is_exact():
    # f = 1 on D_0..D_K, 0 on the tail; level-k box integral is l (rho^2 - (1 - l)^2)
    K = 9
    g = AnnulusGrid(K)
    f = GridFunction(g, np.r_[np.ones(K + 1), 0.0])
    M = apply_maximal("standard", T, f)
    rho = 1 - 2.0 ** -(K + 1)
    ell = 2.0 ** -np.arange(K + 1)
    v = ell * (rho**2 - (1 - ell) ** 2) / (ell**2 * (2 - ell)) ** T
    np.testing.assert_allclose(M.values[:-1], np.maximum.accumulate(v), rtol=1e-13)


def test_maximal_annulus_needs_zero_tail():
    with pytest.raises(ValueError, match="tail"):
        apply_maximal("standard", T, GridFunction.constant(AnnulusGrid(4)))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 5.0), st.integers(0, 2**31 - 1))
def test_level_set_decomposition_properties(alpha, seed):
    g = make_polar_grid(16, 64, 1 - 2**-5, "geometric")
    f = GridFunction(g, np.random.default_rng(seed).random(g.size) * 3)
    L = resolvable_level(g)
    boxes = level_set_decomposition("standard", T, f, alpha, max_level=L)
    M = apply_maximal("standard", T, f, max_level=L)
    assert np.array_equal(boxes_node_mask(boxes, g), M.values > alpha)
    arcs = [(b.arc.level, b.arc.index) for b in boxes]
    for k, m in arcs:
        # no other selected box contains this one
        for j in range(k):
            assert (j, m >> (k - j)) not in arcs


def test_sparse_matches_dense_kernel_on_cubes():
    fam = family_full_tree(4, n=2, step=2)
    g = CubeGrid(2, 5)
    f = GridFunction(g, np.random.default_rng(1).random(g.size))
    K = sparse_kernel_matrix(fam, T, g)
    np.testing.assert_allclose(apply_sparse(fam, T, f).values, K @ (f.values * g.weights), rtol=1e-12)


def test_sparse_layers_sum_to_total():
    fam = family_carleson(5, "shifted")
    g = make_polar_grid(32, 128, 1 - 2**-6, "geometric")
    f = GridFunction(g, np.random.default_rng(2).random(g.size))
    total = sum(apply_sparse_layer(fam, j, T, f).values for j in range(fam.n_layers))
    np.testing.assert_allclose(apply_sparse(fam, T, f).values, total, rtol=1e-12)


def test_sparse_of_one_on_carleson_family():
    # A 1 at a node of depth d is the sum over k <= d of |Q_k|^{1-t}
    d = 6
    fam = family_carleson(d)
    g = make_polar_grid(d + 2, 256, 1 - 2.0 ** -(d + 1), "geometric")
    out = apply_sparse(fam, T, GridFunction.constant(g)).values.reshape(g.shape)
    ell = 2.0 ** -np.arange(d + 1)
    box = ell**2 * (2 - ell)
    for i, r in enumerate(g.r):
        depth = int(np.floor(-np.log2(1 - r)))
        depth = min(depth, d)
        # box integrals are quadrature values, exact up to angular cell splitting
        ints = [np.sum(g.weights[(g.radius >= 1 - l) & (STANDARD.indices(g.angle, k) == 0)])
                for k, l in enumerate(ell)]
        expect = sum(ints[k] / box[k] ** T for k in range(depth + 1))
        assert out[i, 0] == pytest.approx(expect, rel=1e-12)


def test_bergman_constant_and_positive_oracles():
    g = make_polar_grid(64, 256, 1 - 2**-12, "geometric")
    f = GridFunction.constant(g)
    rs = np.array([0.0, 0.3, 0.6, 0.9])
    z = rs * np.exp(1j * 0.4)
    K = bergman_at(T, f, z)
    np.testing.assert_allclose(K, g.r_max**2, atol=2e-4)
    Kp = bergman_at(T, f, z, positive=True)
    exact = g.r_max**2 * hyp2f1(T, T, 2, (rs * g.r_max) ** 2)
    np.testing.assert_allclose(Kp, exact, rtol=2e-3)


def test_bergman_rejects_outside_points():
    g = make_polar_grid(4, 4, 0.5)
    with pytest.raises(ValueError, match="open unit disc"):
        bergman_at(T, GridFunction.constant(g), [1.0])


def test_bergman_warns_when_under_resolved():
    g = make_polar_grid(8, 8, 0.999)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        bergman_at(T, GridFunction.constant(g), [0.998])
    assert any(issubclass(r.category, QuadratureWarning) for r in rec)


def test_sparse_domination_bounded_by_common_box_constant():
    g = make_polar_grid(24, 64, 1 - 2**-6, "geometric")
    rng = np.random.default_rng(5)
    for f in (GridFunction.constant(g), GridFunction(g, rng.random(g.size))):
        res = sparse_domination_check(T, f)
        assert 0 < res.sup_ratio <= COMMON_BOX_CONSTANT**T


def test_sparse_domination_rejects_negative_f():
    g = make_polar_grid(4, 8, 0.5)
    with pytest.raises(ValueError, match="f >= 0"):
        sparse_domination_check(T, GridFunction(g, -np.ones(g.size)))


def test_operator_spec_ranges():
    with pytest.raises(ValueError, match="admissible"):
        OperatorSpec("maximal", 1.5)
    with pytest.raises(ValueError, match="admissible"):
        OperatorSpec("sparse", 1.6, family=family_carleson(3))
    spec = OperatorSpec("sparse", 1.4, family=family_carleson(3))
    assert spec.t_bound() == pytest.approx(1.5)
    # counterexample: eta = 1/2, degree m + 1
    assert OperatorSpec("sparse", 1.05, family=family_counterexample(4)).t_bound() == pytest.approx(1.2)
    assert not OperatorSpec("bergman", 1.2).positive


def test_empty_family_gives_zero():
    g = CubeGrid(1, 3)
    assert np.all(apply_sparse(None, T, GridFunction.constant(g)).values == 0)


def test_single_cube_family_is_root_average():
    g = CubeGrid(1, 4)
    f = GridFunction(g, np.arange(16.0))
    out = apply_sparse(GradedSparseFamily([0], [[0]]), T, f)
    np.testing.assert_allclose(out.values, f.integral())
