import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hypersingular.grids import AnnulusGrid, make_polar_grid
from hypersingular.norms import lp_norm
from hypersingular.operators import ResolutionError
from hypersingular.weights import (RadialWeight, Verdict, annulus_terms, bekolle_bonami, bekolle_bonami_power,
                                   critical_power, endpoint_strong_condition, endpoint_weak_condition,
                                   extremal_fk, extremal_fN)


def test_critical_power():
    assert critical_power(1.25) == pytest.approx(1.0)
    assert critical_power(1.1) == pytest.approx(4.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.9, 3), st.floats(0, 0.9), st.floats(0.01, 0.099))
def test_power_integral_against_quad(gamma, a, h):
    w = RadialWeight.power(gamma)
    b = a + h
    exact = quad(lambda r: (1 - r) ** gamma, a, b)[0]
    assert w.power_integral(1.0, a, b) == pytest.approx(exact, rel=1e-8)


def test_power_integral_divergence():
    assert math.isinf(RadialWeight.power(-1.0).power_integral(1.0, 0.5, 1.0))
    assert RadialWeight.power(-0.5).power_integral(1.0, 0.0, 1.0) == pytest.approx(2.0)


def test_table_weight(tmp_path):
    p = tmp_path / "w.csv"
    r = np.linspace(0, 0.999, 50)
    np.savetxt(p, np.column_stack([r, 1 + r]), delimiter=",")
    w = RadialWeight.parse(f"table:{p}")
    assert w(0.5) == pytest.approx(1.5)
    assert w.power_integral(1.0, 0.0, 0.5) == pytest.approx(0.625, rel=1e-6)
    assert RadialWeight.parse("power:-0.5").gamma == -0.5
    with pytest.raises(ValueError):
        RadialWeight.parse("cosine:1")


@pytest.mark.parametrize("t", [1.1, 1.25, 1.4])
def test_annulus_terms_closed_form(t):
    # a_k = 2^k int (1 - r)^{-gamma s} over [1 - 2^-k, 1 - 2^-(k+1)]
    gamma = -0.3
    s = critical_power(t)
    a = annulus_terms(RadialWeight.power(gamma), t, 10)
    y = 1 - gamma * s
    for k in range(11):
        u0, u1 = 2.0 ** -(k + 1), 2.0**-k
        assert a[k] == pytest.approx(2**k * (u1**y - u0**y) / y, rel=1e-10)


@pytest.mark.parametrize("t", [1.1, 1.25, 1.4])
def test_unweighted_verdicts(t):
    w = RadialWeight.unweighted()
    assert endpoint_weak_condition(w, t).verdict is Verdict.Bounded
    strong = endpoint_strong_condition(w, t)
    assert strong.verdict is Verdict.Unbounded
    assert strong.bekolle_bonami.member is True
    assert strong.partial_sums[-1] == pytest.approx(0.5 * 41)


def test_bekolle_bonami_power_closed_form():
    for gamma, l in [(-0.5, 2.0), (0.0, 2.0), (0.3, 1.6), (-0.2, 4 / 3)]:
        res = bekolle_bonami(RadialWeight.power(gamma), l)
        assert res.member is True
        assert res.constant == pytest.approx(bekolle_bonami_power(gamma, l), rel=1e-8)
    assert bekolle_bonami(RadialWeight.power(-1.0), 2.0).member is False
    assert bekolle_bonami(RadialWeight.power(1.0), 2.0).member is False
    assert math.isinf(bekolle_bonami_power(1.0, 2.0))


def test_extremal_fk_norm_on_annulus_grid():
    t = 1.25
    g = AnnulusGrid(8)
    f = extremal_fk(RadialWeight.unweighted(), t, 3, g)
    mu = 2 * 2.0**-4 - 3 * 2.0**-8
    assert lp_norm(f, 2) == pytest.approx(mu**0.5)


def test_extremal_fN_on_polar_grid():
    t = 1.25
    g = make_polar_grid(60, 4, 1 - 2**-6, "geometric")
    f = extremal_fN(RadialWeight.power(-0.5), t, 4, g)
    vals = f.values.reshape(g.shape)[:, 0]
    k = np.floor(-np.log2(1 - g.r)).astype(int)
    expect = np.where(k <= 4, 2.0 ** (k * (3 - 2 * t)) * (1 - g.r) ** 0.5, 0.0)
    np.testing.assert_allclose(vals, expect, rtol=1e-12)
    with pytest.raises(ResolutionError):
        extremal_fN(RadialWeight.unweighted(), t, 4, make_polar_grid(8, 4, 0.99))
