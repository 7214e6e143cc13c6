from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypersingular.sparse import (DegenerateFamilyError, DyadicCube, GradedSparseFamily, SparsenessWitness,
                                  degree, family_carleson, family_counterexample, family_full_tree,
                                  layer_decomposition, max_sparseness, sparseness_witness, tail_degree,
                                  to_native_normalization, validate)


@st.composite
def cube_lists(draw, n=1, max_level=6):
    size = draw(st.integers(0, 25))
    out = []
    for _ in range(size):
        k = draw(st.integers(0, max_level))
        idx = tuple(draw(st.integers(0, 2**k - 1)) for _ in range(n))
        out.append(DyadicCube(k, idx))
    return out


def _brute_layers(cubes):
    uniq = sorted(set(cubes) | {DyadicCube(0, (0,) * cubes[0].n if cubes else (0,))},
                  key=lambda c: (c.level, c.index))
    return {c: sum(1 for d in uniq if d != c and d.contains(c)) for c in uniq}


def _brute_sparseness(fam, measure="flat"):
    cubes = fam.cubes
    best = None
    for i, q in enumerate(cubes):
        total = sum(fam.cube_measure(j, measure) for j, c in enumerate(cubes) if q.contains(c))
        r = fam.cube_measure(i, measure) / total
        best = r if best is None else min(best, r)
    return best


def test_cube_basics():
    c = DyadicCube(2, (1, 3))
    assert c.side == Fraction(1, 4) and c.measure == Fraction(1, 16)
    assert c.parent() == DyadicCube(1, (0, 1))
    assert len(c.children()) == 4
    assert all(c.contains(d) for d in c.children())
    assert c.box() == ((Fraction(1, 4), Fraction(1, 2)), (Fraction(3, 4), Fraction(1)))


def test_root_is_adjoined_and_duplicates_removed():
    fam = GradedSparseFamily([2, 2, 1], [[1], [1], [0]])
    assert len(fam) == 3
    assert fam.cube(0) == DyadicCube(0, (0,))
    assert fam.layer.tolist() == [0, 1, 2]


def test_cube_outside_root_rejected():
    with pytest.raises(ValueError, match="not contained in the root"):
        GradedSparseFamily([1], [[2]])


@settings(max_examples=60, deadline=None)
@given(cube_lists(n=1))
def test_layers_count_ancestors(cubes):
    fam = GradedSparseFamily.from_cubes(cubes, n=1)
    expect = _brute_layers(cubes)
    for i, c in enumerate(fam):
        assert fam.layer[i] == expect[c]


@settings(max_examples=60, deadline=None)
@given(cube_lists(n=2, max_level=4))
def test_layers_are_disjoint(cubes):
    fam = GradedSparseFamily.from_cubes(cubes, n=2)
    for layer in layer_decomposition(fam).layers:
        for a in layer:
            for b in layer:
                assert a == b or not (a.contains(b) or b.contains(a))


@settings(max_examples=40, deadline=None)
@given(cube_lists(n=1))
def test_optimal_witness_attains_packing_bound(cubes):
    fam = GradedSparseFamily.from_cubes(cubes, n=1)
    eta, _ = max_sparseness(fam)
    assert eta == _brute_sparseness(fam)
    w = sparseness_witness(fam, "optimal")
    assert w.eta == eta
    assert validate(fam, eta, w).valid


@settings(max_examples=40, deadline=None)
@given(cube_lists(n=2, max_level=4))
def test_residual_witness_validates(cubes):
    fam = GradedSparseFamily.from_cubes(cubes, n=2)
    w = sparseness_witness(fam, "residual")
    if w.eta > 0:
        assert validate(fam, w.eta, w).valid
    assert w.eta <= max_sparseness(fam)[0]


@settings(max_examples=30, deadline=None)
@given(cube_lists(n=2, max_level=5))
def test_text_round_trip(cubes):
    fam = GradedSparseFamily.from_cubes(cubes, n=2, meta={"tag": "x"})
    assert GradedSparseFamily.from_text(fam.to_text()) == fam


def test_save_load(tmp_path):
    fam = family_carleson(3, "shifted")
    fam.save(tmp_path / "f.txt")
    back = GradedSparseFamily.load(tmp_path / "f.txt")
    assert back == fam and back.system == fam.system


@pytest.mark.parametrize("d", [1, 3, 6])
def test_full_tree_sparseness(d):
    # every cube contains its whole subtree, so the root ratio 1 / (d + 1) is the worst
    fam = family_full_tree(d)
    assert sparseness_witness(fam, "residual").eta == 0
    assert max_sparseness(fam)[0] == Fraction(1, d + 1)
    w = sparseness_witness(fam, "optimal")
    assert validate(fam, Fraction(1, d + 1), w).valid


@pytest.mark.parametrize("d", [2, 4, 7])
def test_carleson_family_constants(d):
    fam = family_carleson(d)
    assert degree(fam) == 1
    assert fam.n_layers == d + 1
    assert fam.scales == [Fraction(1, 2**k) for k in range(d + 1)]
    assert sparseness_witness(fam).eta == Fraction(1, 2)
    # packing in flat measure: sum_k 2^k 4^-k over the subtree of the root
    assert max_sparseness(fam)[0] == 1 / (2 - Fraction(1, 2**d))
    disc_root = sum(2**k * (Fraction(1, 4**k) * (2 - Fraction(1, 2**k))) for k in range(d + 1))
    assert max_sparseness(fam, "disc")[0] == 1 / disc_root


def test_carleson_disc_residual():
    # upper tent over the box: l^2 (1 - 3l/4) / (l^2 (2 - l)), smallest at the root
    fam = family_carleson(4)
    w = sparseness_witness(fam, "residual", "disc")
    assert w.eta == Fraction(1, 4)
    assert validate(fam, w.eta, w).valid


@pytest.mark.parametrize("m", [1, 2, 5, 10])
def test_counterexample_family(m):
    fam = family_counterexample(m)
    assert len(fam) == 2**m + 1
    assert degree(fam) == m + 1
    assert sparseness_witness(fam).eta == Fraction(1, 2)
    assert max_sparseness(fam)[0] == Fraction(2, 3)
    assert validate(fam, Fraction(1, 2), sparseness_witness(fam)).valid


def test_counterexample_normalization():
    fam = family_counterexample(3)
    assert to_native_normalization(1.0, fam, 1.25) == pytest.approx(2**-0.25)


def test_degree_of_even_generations():
    fam = family_full_tree(8, step=2)
    assert degree(fam) == 2
    assert tail_degree(fam) == 2


def test_degree_of_single_layer():
    with pytest.raises(DegenerateFamilyError):
        degree(GradedSparseFamily([0], [[0]]))


def test_mutated_witness_fails():
    fam = family_carleson(3)
    w = sparseness_witness(fam)
    sets = {q: list(b) for q, b in w.sets.items()}
    # push one box of the first child into its sibling's tent
    sets[2] = sets[2] + sets[1][:1]
    bad = SparsenessWitness(w.eta, w.method, w.measure, sets, w.worst)
    report = validate(fam, w.eta, bad)
    assert not report.valid
    assert any("leaves the cube" in v or "overlap" in v for v in report.violations)


def test_witness_above_packing_bound_fails():
    fam = family_full_tree(2)
    w = sparseness_witness(fam, "optimal", eta=Fraction(1, 2))
    assert not validate(fam, Fraction(1, 2), w).valid
