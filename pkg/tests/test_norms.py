import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hypersingular.grids import CubeGrid, GridFunction, make_polar_grid
from hypersingular.norms import (LorentzExponent, distribution, lorentz_norm, lorentz_p1_norm, lp_norm,
                                 op_norm_corner, restricted_probe, weak_norm, weak_opnorm_from_constant)
from hypersingular.operators import OperatorSpec, sparse_kernel_matrix
from hypersingular.sparse import family_carleson, family_counterexample, family_full_tree
from hypersingular.weights import RadialWeight

G = CubeGrid(1, 5)
values = arrays(float, G.size, elements=st.floats(-50, 50, allow_nan=False))


@settings(max_examples=80, deadline=None)
@given(values, st.floats(1, 6))
def test_norm_chain(v, p):
    f = GridFunction(G, v)
    w, s, l = weak_norm(f, p), lp_norm(f, p), lorentz_p1_norm(f, p)
    assert w <= s * (1 + 1e-12) + 1e-12
    assert s <= l * (1 + 1e-12) + 1e-12


@given(st.integers(1, 32), st.floats(1, 8))
def test_indicator_norms(count, p):
    mask = np.arange(G.size) < count
    f = GridFunction.indicator(G, mask)
    mu = count / G.size
    assert lp_norm(f, p) == pytest.approx(mu ** (1 / p))
    assert weak_norm(f, p) == pytest.approx(mu ** (1 / p))
    assert lorentz_p1_norm(f, p) == pytest.approx(p * mu ** (1 / p))
    assert lorentz_norm(f, LorentzExponent(p, math.inf)) == pytest.approx(mu ** (1 / p))


def test_distribution_of_step_function():
    f = GridFunction(CubeGrid(1, 2), [3.0, 1.0, 3.0, 2.0])
    v, cum = distribution(f)
    assert v.tolist() == [3.0, 2.0, 1.0]
    assert cum.tolist() == [0.5, 0.75, 1.0]
    # sup of lam |{f > lam}|^{1/2} approached as lam rises to 2: 2 * 0.75^{1/2}
    assert weak_norm(f, 2) == pytest.approx(max(3 * 0.5**0.5, 2 * 0.75**0.5, 1.0))


def test_norm_arguments():
    f = GridFunction.constant(G)
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)
    with pytest.raises(ValueError):
        weak_norm(f, math.inf)
    with pytest.raises(ValueError):
        LorentzExponent(2, 2)
    assert lp_norm(GridFunction(G, -2 * np.ones(G.size)), math.inf) == 2.0


def test_weighted_lp_norm():
    g = make_polar_grid(2000, 4, 0.999, "uniform")
    f = GridFunction.constant(g)
    # int (1 - r)^0.5 dA / pi over r < rho, by quadrature of 2 r (1 - r)^0.5
    from scipy.integrate import quad
    exact = quad(lambda r: 2 * r * (1 - r) ** 0.5, 0, g.r_max)[0]
    assert lp_norm(f, 1, RadialWeight.power(0.5)) == pytest.approx(exact, rel=1e-5)


@pytest.mark.parametrize("family,grid", [
    (family_full_tree(4), CubeGrid(1, 6)),
    (family_full_tree(3, n=2), CubeGrid(2, 4)),
    (family_counterexample(4), CubeGrid(1, 6)),
])
@pytest.mark.parametrize("t", [1.1, 1.25, 1.4])
def test_corner_norms_match_dense_kernel(family, grid, t):
    K = sparse_kernel_matrix(family, t, grid, convention="exact")
    w = grid.weights
    assert op_norm_corner(family, t, (1, 1)) == pytest.approx(np.max(w @ K), rel=1e-12)
    assert op_norm_corner(family, t, (math.inf, math.inf)) == pytest.approx(np.max(K @ w), rel=1e-12)
    assert op_norm_corner(family, t, (math.inf, 1)) == pytest.approx(w @ K @ w, rel=1e-12)
    assert op_norm_corner(family, t, (1, math.inf)) == pytest.approx(K.max(), rel=1e-12)


@pytest.mark.parametrize("t", [1.1, 1.25, 1.4])
def test_carleson_layer_corner_closed_forms(t):
    fam = family_carleson(8)
    for j in range(9):
        ell = 2.0**-j
        box = ell * ell * (2 - ell)
        assert op_norm_corner(fam, t, (1, 1), layer=j) == pytest.approx(box ** (1 - t), rel=1e-13)
        assert op_norm_corner(fam, t, (math.inf, 1), layer=j) == pytest.approx(2**j * box ** (2 - t), rel=1e-13)


def test_unknown_corner():
    with pytest.raises(ValueError, match="corner"):
        op_norm_corner(family_full_tree(2), 1.2, (2, 1))


def test_weak_opnorm_needs_positive_operator():
    g = make_polar_grid(4, 8, 0.5)
    with pytest.raises(ValueError, match="positive"):
        weak_opnorm_from_constant(OperatorSpec("bergman", 1.2), 2, g)


def test_restricted_probe_on_indicators():
    fam = family_full_tree(3)
    op = OperatorSpec("sparse", 1.1, family=fam, eta=0.25)
    g = CubeGrid(1, 4)
    sets = [np.arange(16) < k for k in (1, 4, 16)]
    val = restricted_probe(op, 1, 1, sets, g)
    assert 0 < val <= op_norm_corner(fam, 1.1, (1, 1)) * 1.0000001
    with pytest.raises(ValueError):
        restricted_probe(op, 1, 1, [], g)
