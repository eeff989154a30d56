import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate

from rtlab.errors import PreconditionViolated, SupportMismatch
from rtlab.statdist import (
    DISTINGUISHABLE,
    PERFECT_INDISTINGUISHABLE,
    PERFECTLY_DISTINGUISHABLE,
    STATISTICAL,
    DistanceReport,
    ResampleBothScalar,
    ShiftedUniform,
    classify,
    conditional_density_resample_both,
    d_deterministic,
    d_resample_both_scalar,
    d_resample_noise,
    d_resample_noise_max,
    mc_distance,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
positive = st.floats(1e-3, 1e6, allow_nan=False, allow_infinity=False)


def test_deterministic_examples(rng):
    assert d_deterministic([1.0], [2.0]).D == 1.0
    assert d_deterministic([3, 3], [3, 3]).D == 0.0
    a = rng.normal(size=5)
    b = a.copy()
    b[2] = np.nextafter(b[2], np.inf)
    rep = d_deterministic(a, b)
    assert rep.D == 1.0 and rep.classification == PERFECTLY_DISTINGUISHABLE


def test_deterministic_dimension_mismatch():
    with pytest.raises(ValueError):
        d_deterministic([1.0], [1.0, 2.0])


def test_resample_noise_examples():
    assert d_resample_noise([1.0, 2.0], [1.0, 2.0], 0, 1.0).D == 0.0
    assert d_resample_noise([0.0], [3.0], 0, 3.0).D == 0.5
    assert d_resample_noise([0.0], [9.0], 0, 3.0).D == 1.0
    assert d_resample_noise([0.0], [6.0], 0, 3.0).D == 1.0


def test_resample_noise_component_selection():
    a, b = [0.0, 0.0], [1.0, 3.0]
    assert d_resample_noise(a, b, 0, 4.0).D == 0.125
    assert d_resample_noise(a, b, 1, 4.0).D == 0.375
    assert d_resample_noise_max(a, b, 4.0).D == 0.375
    with pytest.raises(IndexError):
        d_resample_noise(a, b, 2, 4.0)


def test_resample_noise_needs_positive_noise():
    with pytest.raises(PreconditionViolated):
        d_resample_noise([0.0], [1.0], 0, 0.0)


def test_resample_both_examples():
    assert d_resample_both_scalar(2.0, -2.0, 1.0, 4.0).D == 0.0
    assert d_resample_both_scalar(1.0, 2.0, 1.0, 2.0).D == 0.125
    with pytest.raises(PreconditionViolated):
        d_resample_both_scalar(1.0, 3.0, 1.0, 2.0)
    with pytest.raises(PreconditionViolated):
        d_resample_both_scalar(0.0, 1.0, 1.0, 2.0)


def test_density_branches():
    f = conditional_density_resample_both
    assert f(-100.0, 1.0, 1.0, 2.0) == 0.0
    assert f(100.0, 1.0, 1.0, 2.0) == 0.0
    assert f(0.0, 1.0, 1.0, 2.0) == 0.25
    # ramp: support edge at 3, plateau ends at 1
    assert f(2.0, 1.0, 1.0, 2.0) == pytest.approx(1 / 8)
    assert f(3.0, 1.0, 1.0, 2.0) == 0.0
    assert np.allclose(f(np.array([-0.5, 0.5]), 1.0, 1.0, 2.0), 0.25)


@pytest.mark.parametrize("x,R_max,r_max", [(1.0, 1.0, 2.0), (0.5, 3.0, 1.5), (2.0, 1.0, 2.0),
                                           (-3.0, 0.7, 5.0), (4.0, 2.0, 1.0)])
def test_density_integrates_to_one(x, R_max, r_max):
    w = abs(x) * R_max + r_max
    kinks = sorted({-w, -abs(abs(x) * R_max - r_max), abs(abs(x) * R_max - r_max), w})
    val, _ = integrate.quad(conditional_density_resample_both, -w, w, args=(x, R_max, r_max),
                            points=kinks[1:-1], epsabs=1e-12, limit=200)
    assert abs(val - 1.0) <= 1e-6


def test_density_matches_convolution_samples():
    s = ResampleBothScalar(1.5, 1.0, 2.0)
    y = s(np.random.default_rng(0), 10**6)
    hist, edges = np.histogram(y, bins=70, range=(-3.5, 3.5), density=True)
    mid = 0.5 * (edges[:-1] + edges[1:])
    assert np.abs(hist - conditional_density_resample_both(mid, 1.5, 1.0, 2.0)).max() < 0.01


def _tv_by_quadrature(x1, x2, R_max, r_max):
    w = max(abs(x1), abs(x2)) * R_max + r_max
    g = lambda y: abs(conditional_density_resample_both(y, x1, R_max, r_max)
                      - conditional_density_resample_both(y, x2, R_max, r_max))
    val, _ = integrate.quad(g, -w, w, limit=400, epsabs=1e-12)
    return 0.5 * val


@pytest.mark.parametrize("x1,x2,R_max,r_max", [(1.0, 2.0, 1.0, 2.0), (0.3, -1.1, 2.0, 3.0), (5.0, 1.0, 0.1, 0.5)])
def test_fresh_keys_matches_quadrature(x1, x2, R_max, r_max):
    assert d_resample_both_scalar(x1, x2, R_max, r_max).D == pytest.approx(_tv_by_quadrature(x1, x2, R_max, r_max), abs=1e-7)


def test_mc_identical_samplers():
    s = ShiftedUniform(0.0, 1.0)
    rep = mc_distance(s, s, 10**6)
    assert rep.method == "MonteCarlo"
    assert rep.D <= 3 * rep.mc_stderr


def test_mc_fresh_offset_setup():
    rep = mc_distance(ShiftedUniform(0.0, 2.0), ShiftedUniform(2.0, 2.0), 10**6)
    assert abs(rep.D - 0.5) <= 0.01


def test_mc_fresh_keys_setup():
    rep = mc_distance(ResampleBothScalar(1.0, 1.0, 2.0), ResampleBothScalar(2.0, 1.0, 2.0), 10**6)
    assert abs(rep.D - 0.125) <= 0.01


def test_mc_reproducible_and_seeded():
    a = mc_distance(ShiftedUniform(0.0, 1.0), ShiftedUniform(0.5, 1.0), 10**4, seed=3)
    b = mc_distance(ShiftedUniform(0.0, 1.0), ShiftedUniform(0.5, 1.0), 10**4, seed=3)
    c = mc_distance(ShiftedUniform(0.0, 1.0), ShiftedUniform(0.5, 1.0), 10**4, seed=4)
    assert a == b and a.D != c.D


def test_mc_support_mismatch():
    with pytest.raises(SupportMismatch):
        mc_distance(ShiftedUniform(0.0, 1.0), ShiftedUniform(5.0, 1.0), 10**4, support=(-1, 1))


def test_mc_requires_enough_samples():
    with pytest.raises(PreconditionViolated):
        mc_distance(ShiftedUniform(0.0, 1.0), ShiftedUniform(0.0, 1.0), 100)


def test_mc_disjoint_supports_give_one():
    rep = mc_distance(ShiftedUniform(0.0, 1.0), ShiftedUniform(10.0, 1.0), 10**4)
    assert rep.D == 1.0 and rep.classification == PERFECTLY_DISTINGUISHABLE


def test_classify_examples():
    assert classify(0.0) == PERFECT_INDISTINGUISHABLE
    assert classify(1.0) == PERFECTLY_DISTINGUISHABLE
    assert classify(2.0**-40, 40) == STATISTICAL
    assert classify(2.0**-39, 40) == DISTINGUISHABLE
    assert classify(0.3) == DISTINGUISHABLE
    with pytest.raises(ValueError):
        classify(1.5)


def test_report_range_enforced():
    with pytest.raises(ValueError):
        DistanceReport(-0.1, "ClosedForm", DISTINGUISHABLE)
    rep = d_resample_noise([0.0], [1.0], 0, 1.0, kappa=10)
    assert rep.to_dict() == {"D": 0.5, "method": "ClosedForm", "classification": DISTINGUISHABLE, "mc_stderr": None}


@settings(max_examples=200)
@given(a=finite, b=finite, r=positive)
def test_noise_distance_symmetric(a, b, r):
    assert d_resample_noise([a], [b], 0, r).D == d_resample_noise([b], [a], 0, r).D
    assert d_resample_noise([a], [a], 0, r).D == 0.0


@settings(max_examples=200)
@given(a=finite, b=finite, r=positive, c=st.floats(1e-3, 1e3))
def test_noise_distance_scale_invariant(a, b, r, c):
    D = d_resample_noise([a], [b], 0, r).D
    Dc = d_resample_noise([c * a], [c * b], 0, c * r).D
    assert Dc == pytest.approx(D, rel=1e-12, abs=1e-15)


@settings(max_examples=200)
@given(a=finite, b=finite, r=positive, e=st.integers(-20, 20))
def test_noise_distance_scale_invariant_power_of_two(a, b, r, e):
    c = 2.0**e
    assert d_resample_noise([c * a], [c * b], 0, c * r).D == d_resample_noise([a], [b], 0, r).D


@settings(max_examples=100)
@given(a=st.floats(-1.0, 1.0), b=st.floats(-1.0, 1.0))
def test_halving_law(a, b):
    for kappa in range(1, 41):
        assert d_resample_noise([a], [b], 0, 2.0 ** (kappa + 1)).D == d_resample_noise([a], [b], 0, 2.0**kappa).D / 2


@settings(max_examples=300)
@given(x1=st.floats(-10, 10), x2=st.floats(-10, 10), R_max=st.floats(1e-3, 10), slack=st.floats(1.0, 100.0))
def test_fresh_keys_bound_and_symmetry(x1, x2, R_max, slack):
    # below ~1e-6 relative magnitude the exact value 1/4 - eps rounds to 1/4
    assume(min(abs(x1), abs(x2)) >= 1e-6)
    r_max = slack * max(abs(x1), abs(x2)) * R_max
    assume(r_max > 0)
    D = d_resample_both_scalar(x1, x2, R_max, r_max).D
    assert D < 0.25
    assert D == d_resample_both_scalar(x2, x1, R_max, r_max).D


def test_fresh_keys_tiny_plaintexts_stay_finite():
    t = 2.2250738585e-313
    assert d_resample_both_scalar(t, t, 1.0, t).D == 0.0
    assert d_resample_both_scalar(1.0, t, 1.0, 1.0).D <= 0.25
