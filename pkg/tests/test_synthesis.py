import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavebmo.dyadic import (DyadicInterval, Grid, GridFunction, Interval, SCALAR, VectorSpace, average,
                            dyadics_within, read_gridfunction)
from wavebmo.errors import PreconditionError, ResolutionError, TruncationError
from wavebmo.growth import GrowthModel
from wavebmo.norms import CoefficientArray, bmo_norm, carleson_norm
from wavebmo.synthesis import (SynthesisCutoffs, annular_decompose, classify, constancy_check,
                               holder_weight_check, individual_bound_check, oscillation_growth_check,
                               piece_ratios, synthesize, unconditionality_probe, write_synthesis)
from wavebmo.weights import WeightModel

from oracles import power_integral

GRID = Grid.symmetric(3, 8)
ONE = GrowthModel.constant()
W1 = WeightModel.constant(GRID)
DB4 = None


def db4():
    global DB4
    if DB4 is None:
        from wavebmo.wavelets import WaveletModel
        DB4 = WaveletModel.daubechies(4)
    return DB4


def haar():
    from wavebmo.wavelets import WaveletModel
    return WaveletModel.haar()


CUT = SynthesisCutoffs(-6, 2, 4)


def haar_fn(grid):
    return GridFunction.from_callable(grid, lambda x: np.where((x >= 0) & (x < .5), 1.0,
                                                               np.where((x >= .5) & (x < 1), -1.0, 0.0)))


def random_array(seed, n, region=Interval(-2, 2), scales=range(-5, 2), space=SCALAR):
    rng = np.random.default_rng(seed)
    entries = {}
    while len(entries) < n:
        j = int(rng.integers(scales.start, scales.stop))
        size = F(2) ** j
        k = int(rng.integers(math.ceil(region.left / size), math.floor(region.right / size)))
        entries[DyadicInterval(j, k)] = rng.normal(size=space.dim)
    return CoefficientArray.from_dict(entries, space)


# -- annular decomposition ---------------------------------------------------------

def test_constant_function_pieces_vanish():
    c = GridFunction.constant(GRID, 3.0)
    for piece in annular_decompose(c, Interval(0, 1), 3):
        assert not np.any(piece.function.samples)


def test_haar_annular_example():
    h = haar_fn(GRID)
    I = Interval(0, F(1, 4))
    assert average(h, I)[0] == 1.0
    f1 = annular_decompose(h, I, 1)[0].function
    x = GRID.midpoints()
    expected = np.where((x >= -1 / 8) & (x < 0), -1.0, 0.0)
    np.testing.assert_array_equal(f1.samples[:, 0], expected)


@given(st.integers(0, 2 ** 31), st.integers(-8, 7), st.integers(-4, -1), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_reconstruction_is_exact(seed, k, j, l_max):
    I = DyadicInterval(j, k).interval()
    if not GRID.window.contains(I.dilate(2 ** l_max)):
        return
    f = GridFunction(GRID, np.random.default_rng(seed).integers(-50, 50, size=(GRID.size, 2)).astype(float),
                     VectorSpace(2, 2.0))
    pieces = annular_decompose(f, I, l_max)
    total = sum(p.function.samples for p in pieces) + average(f, I)
    a, b = GRID.index_range(I.dilate(2 ** l_max))
    np.testing.assert_array_equal(total[a:b], f.samples[a:b])
    # annuli for l >= 2 are disjoint
    supports = [np.any(p.function.samples != 0, axis=1) for p in pieces[1:]]
    for s1 in range(len(supports)):
        for s2 in range(s1 + 1, len(supports)):
            assert not np.any(supports[s1] & supports[s2])


def test_truncation_reports_largest_feasible():
    with pytest.raises(TruncationError) as exc:
        annular_decompose(haar_fn(GRID), Interval(0, 1), 10)
    assert exc.value.largest_feasible == 3


# -- the two lemmas ----------------------------------------------------------------

def test_oscillation_growth_examples():
    lhs, rhs, ratio = oscillation_growth_check(GridFunction.constant(GRID, 2.0), W1, ONE, Interval(0, 1), 2)
    assert lhs == 0.0 and ratio == 0.0
    lhs, rhs, ratio = oscillation_growth_check(haar_fn(GRID), W1, ONE, Interval(0, 1), 1)
    # sum over k=1 only: 2^0 * w(2I) * rho(2) = 2
    assert lhs == 1.0 and rhs == 2.0 and ratio == 0.5


def test_oscillation_growth_brute_rhs():
    w = WeightModel.power(GRID, 0.3)
    rho = GrowthModel.power(0.2)
    I = Interval(F(1, 4), F(1, 2))
    f = GridFunction.from_callable(GRID, lambda x: np.log(np.abs(x - 0.3)))
    _, rhs, _ = oscillation_growth_check(f, w, rho, I, 3)
    brute = sum(2 ** (3 - k) * w.mass(I.dilate(2 ** k)) * (0.25 * 2 ** k) ** 0.2 for k in (1, 2, 3))
    assert rhs == pytest.approx(brute, rel=1e-14)


def test_holder_examples():
    J = Interval(1, 2)
    for c in (1.0, 0.3, 7.0):
        lhs, rhs, ok = holder_weight_check(WeightModel.constant(GRID, c), J, 3.0)
        assert ok and lhs == pytest.approx(rhs, rel=1e-13) and lhs == pytest.approx(c ** (-2 / 3), rel=1e-13)
    w = WeightModel.power(GRID, 0.5)
    lhs, rhs, ok = holder_weight_check(w, J, 2.0)
    closed_l = (1 / power_integral(0.5, 1, 2)) ** 0.5
    closed_r = power_integral(-0.25, 1, 2)
    assert ok and lhs < rhs
    assert lhs == pytest.approx(closed_l, rel=1e-5) and rhs == pytest.approx(closed_r, rel=1e-5)
    assert closed_l < closed_r


@given(st.floats(-0.9, 3.0), st.floats(1.05, 8.0), st.integers(-6, 1), st.integers(-8, 7))
@settings(max_examples=50, deadline=None)
def test_holder_always_holds(a, p, j, k):
    J = DyadicInterval(j, k)
    if not GRID.window.contains(J.interval()):
        return
    assert holder_weight_check(WeightModel.power(GRID, a, 0.1), J, p)[2]


# -- classification ----------------------------------------------------------------

def test_classification_examples():
    I = Interval(0, 1)
    c = classify(I, [DyadicInterval(0, 0), DyadicInterval(-1, 8), DyadicInterval(-1, 0)])
    assert c.group_of(DyadicInterval(0, 0)) == 1
    assert c.group_of(DyadicInterval(-1, 8)) == 2
    assert c.group_of(DyadicInterval(-1, 0)) == 3


@given(st.integers(-5, 2), st.integers(-16, 15))
@settings(max_examples=40, deadline=None)
def test_classification_partitions(j, k):
    I = DyadicInterval(j, k).interval().dilate(1)
    cands = dyadics_within(Interval(-4, 4), -5)
    c = classify(I, cands)
    assert len(c) == len(cands)
    assert set(c.large) | set(c.far) | set(c.near) == set(cands)
    for J in c.far:
        lo2, hi2 = J.left - J.length / 2, J.right + J.length / 2
        assert hi2 <= I.left - I.length / 2 or lo2 >= I.right + I.length / 2
        assert 2 * J.length <= I.length


# -- synthesis ----------------------------------------------------------------------

def test_synthesis_examples():
    I = Interval(0, 1)
    r = synthesize(CoefficientArray.zeros(), db4(), I, CUT)
    assert not np.any(r.f_I.samples)
    J3 = DyadicInterval(-2, 1)
    r = synthesize(CoefficientArray.from_dict({J3: [2.5]}), db4(), I, CUT)
    assert r.counts == (0, 0, 1) and not r.renormalization
    np.testing.assert_allclose(r.f_I.samples[:, 0], 2.5 * db4().psi_J(J3, r.f_I.grid.midpoints()), atol=1e-15)
    J1 = DyadicInterval(0, -1)
    r = synthesize(CoefficientArray.from_dict({J1: [1.7]}), db4(), I, CUT)
    assert r.counts == (1, 0, 0)
    x = r.f_I.grid.midpoints()
    vals = 1.7 * (db4().psi_J(J1, x) - db4().psi_J(J1, np.array([0.5]))[0])
    np.testing.assert_allclose(r.f_I.samples[:, 0], vals, atol=1e-15)
    # the renormalized term vanishes at the centre
    assert 1.7 * (db4().psi_J(J1, np.array([0.5]))[0] - r.renormalization[J1][0] / 1.7) == pytest.approx(0, abs=1e-15)


def test_pieces_sum_and_groups():
    a = random_array(1, 40)
    r = synthesize(a, db4(), Interval(F(-1, 2), F(1, 2)), CUT)
    np.testing.assert_array_equal(r.f_I.samples, r.f1.samples + r.f2.samples + r.f3.samples)
    assert sum(r.counts) + r.omitted <= len(a)


def test_synthesis_preconditions():
    with pytest.raises(PreconditionError):
        synthesize(CoefficientArray.zeros(), haar(), Interval(0, 1), CUT)
    a = CoefficientArray.from_dict({DyadicInterval(-12, 3): [1.0]})
    with pytest.raises(ResolutionError):
        synthesize(a, db4(), Interval(0, 1), SynthesisCutoffs(-12, 0, 4))


def test_omitted_terms_are_bounded():
    a = CoefficientArray.from_dict({DyadicInterval(-7, 10): [1.0], DyadicInterval(-2, 1): [1.0]})
    r = synthesize(a, db4(), Interval(0, 1), CUT)
    assert r.omitted == 1 and r.tail_bound > 0


def test_constancy_examples():
    I, big = Interval(0, 1), Interval(-2, 2)
    assert constancy_check(CoefficientArray.zeros(), db4(), I, big, CUT) == 0.0
    J = DyadicInterval(2, -1)
    a = CoefficientArray.from_dict({J: [1.3]})
    assert constancy_check(a, db4(), I, big, CUT) <= 1e-9
    r1 = synthesize(a, db4(), I, CUT)
    r2 = synthesize(a, db4(), big, CUT)
    d = r2.f_I.restrict(I) - r1.f_I.samples
    const = 1.3 * (db4().psi_J(J, np.array([0.5]))[0] - db4().psi_J(J, np.array([0.0]))[0])
    np.testing.assert_allclose(d[:, 0], const, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_constancy_random_arrays(seed):
    a = random_array(seed, 30, Interval(-3, 3), range(-4, 2))
    assert constancy_check(a, db4(), Interval(F(1, 2), 1), Interval(-1, 3), CUT) <= 1e-7
    assert constancy_check(a, haar(), Interval(F(1, 2), 1), Interval(-1, 3), CUT, check_hypotheses=False) <= 1e-7


def test_constancy_preconditions():
    a = random_array(0, 5)
    with pytest.raises(PreconditionError):
        constancy_check(a, db4(), Interval(0, 1), Interval(-1, 3), CUT, SynthesisCutoffs(-5, 2, 4))
    with pytest.raises(PreconditionError):
        constancy_check(a, db4(), Interval(0, 2), Interval(0, 1), CUT)


def test_individual_bound():
    J = DyadicInterval(-2, 3)
    assert individual_bound_check(CoefficientArray.zeros(), W1, ONE, J, 0.0)
    a = CoefficientArray.from_dict({J: [0.8]})
    C = carleson_norm(a, W1, ONE, 2.0, min_scale=-3).value
    assert C == pytest.approx(0.8 * 2.0, rel=1e-14)
    # equality case: ||a_J|| / C = |J|^(1/2) = w(J) |J|^(-1/2)
    assert individual_bound_check(a, W1, ONE, J, C)
    assert not individual_bound_check(a, W1, ONE, J, C * 0.999)
    b = random_array(5, 12, Interval(-2, 2), range(-4, 1))
    w = WeightModel.power(GRID, 0.3)
    C = carleson_norm(b, w, ONE, 3.0, min_scale=-4).value
    for K, _ in b.items():
        assert individual_bound_check(b, w, ONE, K, C)


def test_piece_ratios_and_probe():
    a = random_array(2, 40)
    w = WeightModel.constant(GRID)
    C = carleson_norm(a, w, ONE, 2.0, min_scale=-5).value
    r = synthesize(a.scaled(1 / C), db4(), Interval(F(-1, 2), F(1, 2)), CUT)
    ratios = piece_ratios(r, w, ONE, 1.5)
    assert set(ratios) == {"f1", "f2", "f3"} and all(np.isfinite(v) and v >= 0 for v in ratios.values())
    probe = unconditionality_probe(r, db4(), n_trials=20)
    assert probe["reorder_deviation"] <= 1e-12
    assert probe["subset_ratio"] < 10


def test_sidecar_round_trip(tmp_path):
    r = synthesize(random_array(4, 20), db4(), Interval(0, 1), CUT)
    side = write_synthesis(r, tmp_path)
    data = json.loads(side.read_text())
    assert data["group_sizes"] == list(r.counts) and data["cutoffs"]["radius"] == "4"
    g = read_gridfunction(tmp_path / "f_I.gf")
    np.testing.assert_array_equal(g.samples, r.f_I.samples)
    assert g.grid == r.f_I.grid


def test_bmo_of_synthesis_is_finite():
    a = random_array(3, 30)
    r = synthesize(a, db4(), Interval(-2, 2), CUT, level=8)
    f = r.normalized()
    fam = [Interval(-2, 2), Interval(-1, 1), Interval(0, 1)]
    w = WeightModel.constant(f.grid)
    assert np.isfinite(bmo_norm(f, w, ONE, fam).value)
    assert abs(average(f, Interval(-2, 2))[0]) < 1e-12
