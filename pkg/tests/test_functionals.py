import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsum.functionals import (
    CheckResult,
    DiscreteMeasure,
    PiecewiseConstant,
    gagliardo_seminorm,
    hardy_check,
    inf_convolution_phi,
    integrability_bound,
    jensen_min,
    max_functional,
    min_functional,
    ratio,
    sum_estimate_check,
    sum_estimate_pointwise,
)
from fracsum.grid import Domain, ExponentFamily, Grid, SampledFunction

from oracles import (
    BUMP_SEMINORM_N4096,
    BUMP_SEMINORM_QUAD,
    FOUR_BUMP_MIN_N4096,
    brute_min_functional_1d,
    bump,
)

FAM = ExponentFamily(((0.3, 1.5), (0.7, 1.2)))


def sample(f, N, domain=None):
    domain = domain or Domain.box([[-1, 1]])
    return SampledFunction.from_callable(domain, N, f)


def bump_on_box(N, amp=1.0):
    return sample(lambda x: amp * bump(x[..., 0]), N)


def random_smooth(rng, N, domain=None, modes=4):
    domain = domain or Domain.box([[0, 1]])
    a = rng.standard_normal((2, modes))
    k = np.pi * np.arange(1, modes + 1)

    def f(x):
        t = x[..., 0, None]
        return np.sum(a[0] * np.cos(k * t) + a[1] * np.sin(k * t), axis=-1)

    return sample(f, N, domain)


# ---------------------------------------------------------------------------
# Seminorms and min/max functionals


@pytest.mark.parametrize("dim", [1, 2])
def test_seminorm_of_constant_is_zero(dim):
    u = sample(lambda x: np.full(x.shape[:-1], 2.5), 16, Domain.box([[0, 1]] * dim))
    assert gagliardo_seminorm(u, 0.4, 1.7) == 0.0


def test_seminorm_of_identity_with_cancelling_exponents():
    # s = 1/2, p = 2 in one dimension: the integrand is identically 1 on the unit square
    u = sample(lambda x: x[..., 0], 64, Domain.box([[0, 1]]))
    assert math.isclose(gagliardo_seminorm(u, 0.5, 2.0), 1.0, rel_tol=1e-9)


def test_bump_seminorm_against_brute_force_oracle():
    val = gagliardo_seminorm(bump_on_box(512), 0.3, 1.5)
    assert abs(val - BUMP_SEMINORM_N4096) / BUMP_SEMINORM_N4096 <= 1e-3
    assert abs(val - BUMP_SEMINORM_QUAD) / BUMP_SEMINORM_QUAD <= 1e-4


def test_bump_seminorm_converges_under_refinement():
    errs = [abs(gagliardo_seminorm(bump_on_box(N), 0.3, 1.5) - BUMP_SEMINORM_QUAD) for N in (64, 128, 256)]
    assert errs[0] > errs[1] > errs[2]


def test_excluding_the_diagonal_is_the_plain_midpoint_sum():
    u = bump_on_box(256)
    got = min_functional(u, FAM, diagonal="exclude")
    want = brute_min_functional_1d(u.values, -1.0, 1.0, FAM.pairs)
    assert math.isclose(got, want, rel_tol=1e-12)


def test_min_functional_with_one_pair_is_the_seminorm():
    u = bump_on_box(128)
    assert min_functional(u, ExponentFamily(((0.4, 1.3),))) == gagliardo_seminorm(u, 0.4, 1.3)


def test_min_functional_of_zero():
    assert min_functional(bump_on_box(64, 0.0), FAM) == 0.0


def test_min_functional_against_brute_force_oracle():
    u = bump_on_box(512, amp=4.0)
    val = min_functional(u, FAM)
    assert abs(val - FOUR_BUMP_MIN_N4096) / FOUR_BUMP_MIN_N4096 <= 1e-3
    for s, p in FAM.pairs:
        assert val <= gagliardo_seminorm(u, s, p)


def test_min_functional_ignores_pair_order():
    u = bump_on_box(128, amp=4.0)
    fam3 = ExponentFamily(((0.3, 1.5), (0.7, 1.2), (0.5, 2.0)))
    a = min_functional(u, fam3)
    b = min_functional(u, fam3.permuted([2, 0, 1]))
    assert math.isclose(a, b, rel_tol=1e-12)


def test_max_functional_basics():
    u = bump_on_box(128)
    fam1 = ExponentFamily(((0.4, 1.3),))
    assert max_functional([u], fam1) == gagliardo_seminorm(u, 0.4, 1.3)
    zero = u.with_values(np.zeros(u.grid.shape))
    assert max_functional([zero, zero], FAM) == 0.0
    assert max_functional([u, u], FAM) >= min_functional(u, FAM)
    with pytest.raises(ValueError):
        max_functional([u], FAM)


def test_max_functional_against_brute_force():
    rng = np.random.default_rng(3)
    u1, u2 = random_smooth(rng, 128), random_smooth(rng, 128)
    got = max_functional([u1, u2], FAM, diagonal="exclude")
    h = 1.0 / 128
    x = (np.arange(128) + 0.5) * h
    d = np.abs(x[:, None] - x[None, :])
    off = d > 0
    dd = np.where(off, d, 1.0)
    terms = [np.abs(u.values[:, None] - u.values[None, :]) ** p / dd ** (1 + s * p) for u, (s, p) in zip((u1, u2), FAM.pairs)]
    want = math.fsum(np.where(off, np.maximum(*terms), 0.0).ravel()) * h * h
    assert math.isclose(got, want, rel_tol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(-5, 5).filter(lambda c: c != 0), st.floats(-3, 3))
def test_homogeneity_and_shift_invariance(lam, c):
    u = bump_on_box(64)
    base = gagliardo_seminorm(u, 0.6, 1.4)
    scaled = gagliardo_seminorm(u.with_values(lam * u.values), 0.6, 1.4)
    assert math.isclose(scaled, abs(lam) ** 1.4 * base, rel_tol=1e-12)
    shifted = min_functional(u.with_values(u.values + c), FAM)
    assert math.isclose(shifted, min_functional(u, FAM), rel_tol=1e-9)


def test_reflection_symmetry():
    rng = np.random.default_rng(1)
    u = random_smooth(rng, 96)
    flipped = u.with_values(u.values[::-1].copy())
    assert math.isclose(min_functional(u, FAM), min_functional(flipped, FAM), rel_tol=1e-12)


def test_result_does_not_depend_on_thread_count():
    u = bump_on_box(1024, amp=4.0)
    assert min_functional(u, FAM, threads=1) == min_functional(u, FAM, threads=4)


def test_two_dimensional_refinement_trend():
    vals = [gagliardo_seminorm(sample(lambda x: x[..., 0], N, Domain.box([[0, 1], [0, 1]])), 0.5, 2.0) for N in (16, 32)]
    assert abs(vals[1] - vals[0]) / vals[1] < 0.02


def test_exterior_pairs_on_a_ball_are_rejected():
    u = sample(lambda x: bump(x[..., 0]), 32, Domain.ball(1, 1.0))
    with pytest.raises(ValueError):
        min_functional(u, FAM, exterior=True)


def test_exterior_pairs_match_a_wider_box():
    # Zero-extension outside [-1, 1] must agree with summing over a wider box.
    # The two discretize the outer pairs differently; their gap shrinks ~4x per refinement.
    narrow = gagliardo_seminorm(bump_on_box(128), 0.3, 1.5, exterior=True)
    wide = SampledFunction.from_callable(Domain.box([[-3, 3]]), 384, lambda x: bump(x[..., 0]))
    wide_val = gagliardo_seminorm(wide, 0.3, 1.5, exterior=True)
    assert math.isclose(narrow, wide_val, rel_tol=1e-4)


def test_invalid_exponents():
    with pytest.raises(ValueError):
        gagliardo_seminorm(bump_on_box(16), 1.0, 2.0)
    with pytest.raises(ValueError):
        gagliardo_seminorm(bump_on_box(16), 0.5, 0.5)


def test_grid_mismatch():
    with pytest.raises(ValueError):
        max_functional([bump_on_box(16), bump_on_box(32)], FAM)


# ---------------------------------------------------------------------------
# Sum estimate


def test_sum_estimate_single_term_is_equality():
    u = bump_on_box(64)
    res = sum_estimate_check([u], ExponentFamily(((0.4, 1.5),)))
    assert res.lhs == res.rhs
    assert res.holds and res.pointwise_holds


def test_sum_estimate_with_cancelling_terms():
    u = bump_on_box(64)
    res = sum_estimate_check([u, u.with_values(-u.values)], FAM)
    assert res.lhs == 0.0
    assert res.holds and res.pointwise_holds


def test_sum_estimate_pointwise_on_random_pairs():
    fam = ExponentFamily(((0.4, 1.0), (0.6, 2.0)))
    rng = np.random.default_rng(2024)
    for _ in range(100):
        u1, u2 = random_smooth(rng, 32), random_smooth(rng, 32)
        bad, worst = sum_estimate_pointwise([u1, u2], fam)
        assert bad == 0
        assert worst <= 1.0 + 1e-12


def test_sum_estimate_length_mismatch():
    with pytest.raises(ValueError):
        sum_estimate_check([bump_on_box(16)], FAM)


# ---------------------------------------------------------------------------
# Jensen-type inequality for minima


def test_jensen_min_zero():
    res = jensen_min([1.0, 2.0], [0.0, 0.0], DiscreteMeasure.uniform(2), [1.0, 2.0])
    assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds


def test_jensen_min_two_atoms():
    res = jensen_min([1.0, 1.0], [0.0, 2.0], DiscreteMeasure.uniform(2), [1.0, 2.0])
    assert math.isclose(res.lhs, 0.25, rel_tol=1e-15)
    assert math.isclose(res.rhs, 1.0, rel_tol=1e-15)
    assert res.holds


@settings(max_examples=200)
@given(
    st.lists(st.tuples(st.floats(0, 10), st.floats(1, 4)), min_size=1, max_size=4),
    st.lists(st.tuples(st.floats(0.01, 1.0), st.floats(0, 10)), min_size=1, max_size=6),
)
def test_jensen_min_random(terms, atoms):
    alphas, p = zip(*terms)
    w, f = zip(*atoms)
    assert jensen_min(alphas, f, DiscreteMeasure.from_weights(w), p).holds


def test_jensen_min_rejects_negative_input():
    with pytest.raises(ValueError):
        jensen_min([1.0], [-1.0], DiscreteMeasure.uniform(1), [1.0])
    with pytest.raises(ValueError):
        jensen_min([-1.0], [1.0], DiscreteMeasure.uniform(1), [1.0])


def test_discrete_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure((0.5, 0.6))
    with pytest.raises(ValueError):
        DiscreteMeasure((1.0, 0.0))


# ---------------------------------------------------------------------------
# Hardy inequalities


@pytest.mark.parametrize("kind", ["zero", "infinity"])
def test_hardy_zero_function(kind):
    res = hardy_check(PiecewiseConstant((0.5, 1.0), (0.0,)), 2.0, 1.0, kind)
    assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds


def test_hardy_equality_instance():
    # g = 1 on (0, 1), p = 1, alpha = 1/2: both sides equal 4
    res = hardy_check(PiecewiseConstant((0.0, 1.0), (1.0,)), 1.0, 0.5, "zero")
    assert math.isclose(res.lhs, 4.0, rel_tol=1e-3)
    assert math.isclose(res.rhs, 4.0, rel_tol=1e-3)
    assert res.holds


def test_hardy_against_direct_quadrature():
    from scipy import integrate

    g = PiecewiseConstant((0.2, 0.7, 1.5), (2.0, 0.5))
    res = hardy_check(g, 2.0, 0.8, "infinity")

    def tail(t):
        return integrate.quad(lambda r: 2.0 if r < 0.7 else 0.5, max(t, 0.2), 1.5, points=[0.7])[0] if t < 1.5 else 0.0

    want = integrate.quad(lambda t: tail(t) ** 2 * t ** (0.8 - 1), 0.0, 1.5, points=[0.2, 0.7], limit=200)[0]
    assert math.isclose(res.lhs, want, rel_tol=1e-6)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
    st.lists(st.floats(0.0, 5.0), min_size=5, max_size=5),
    st.floats(0.01, 1.0),
    st.floats(1.0, 4.0),
    st.floats(0.1, 3.0),
)
def test_hardy_random_step_functions(gaps, values, start, p, alpha):
    edges = tuple(start + np.concatenate([[0.0], np.cumsum(gaps)]))
    g = PiecewiseConstant(edges, tuple(values[: len(edges) - 1]))
    assert hardy_check(g, p, alpha, "zero").holds
    assert hardy_check(g, p, alpha, "infinity").holds


def test_hardy_rejects_bad_parameters():
    g = PiecewiseConstant((0.0, 1.0), (1.0,))
    with pytest.raises(ValueError):
        hardy_check(g, 0.5, 1.0, "zero")
    with pytest.raises(ValueError):
        hardy_check(g, 2.0, 0.0, "zero")
    with pytest.raises(ValueError):
        hardy_check(g, 2.0, 1.0, "middle")


# ---------------------------------------------------------------------------
# Inf-convolution


def test_inf_convolution_at_zero():
    assert inf_convolution_phi([1.0, 2.0], [1.5, 2.0], 0.0)[0] == 0.0


def test_inf_convolution_single_term():
    value, lower, upper = inf_convolution_phi([2.0], [1.5], -3.0)
    assert value == 2.0 * 3.0**1.5 == upper == lower


def test_inf_convolution_equal_split():
    value, lower, upper = inf_convolution_phi([1.0, 1.0], [2.0, 2.0], 1.0)
    assert math.isclose(value, 0.5, rel_tol=1e-9)
    # grid search over the split t1 = t - t2
    y = np.linspace(-1.0, 2.0, 30001)
    assert math.isclose(np.min((1.0 - y) ** 2 + y**2), value, rel_tol=1e-6)
    assert lower <= value <= upper


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0.1, 10), st.floats(1, 4)), min_size=1, max_size=3),
    st.floats(-5, 5),
)
def test_inf_convolution_sandwich(terms, t):
    alphas, p = zip(*terms)
    value, lower, upper = inf_convolution_phi(alphas, p, t)
    assert lower <= value * (1 + 1e-12) + 1e-300
    assert value <= upper * (1 + 1e-12) + 1e-300


def test_inf_convolution_limits():
    with pytest.raises(ValueError):
        inf_convolution_phi([1.0] * 4, [2.0] * 4, 1.0)
    with pytest.raises(ValueError):
        inf_convolution_phi([0.0, 1.0], [2.0, 2.0], 1.0)


# ---------------------------------------------------------------------------
# Integrability bound


def test_integrability_of_zero():
    u = sample(lambda x: 0.0 * x[..., 0], 32, Domain.box([[0, 1]]))
    assert integrability_bound(u, FAM).lhs == 0.0


def test_integrability_of_identity():
    u = sample(lambda x: x[..., 0], 64, Domain.box([[0, 1]]))
    res = integrability_bound(u, ExponentFamily(((0.5, 2.0),)))
    assert math.isclose(res.lhs, 1.0 / 3.0, rel_tol=1e-12)
    assert math.isfinite(res.rhs) and res.holds


def test_integrability_random_functions():
    rng = np.random.default_rng(11)
    for _ in range(5):
        u = random_smooth(rng, 48, Domain.ball(1, 1.0))
        res = integrability_bound(u, FAM)
        assert res.holds
        assert math.isfinite(res.extra["C_dom"])


def test_integrability_needs_bounded_domain():
    u = sample(lambda x: bump(x[..., 0]), 32, Domain.whole(1, 2.0))
    with pytest.raises(ValueError):
        integrability_bound(u, FAM)


# ---------------------------------------------------------------------------
# Records


def test_ratio_conventions():
    assert ratio(0.0, 0.0) == 0.0
    assert ratio(1.0, 0.0) is None
    assert ratio(3.0, 2.0) == 1.5


def test_check_record_fields():
    g = Grid((0.0,), (1.0,), (4,))
    rec = CheckResult("x", 1.0, 2.0, True, 0.5, {"extra": 1}).to_record(g, FAM)
    assert set(rec) == {"name", "lhs", "rhs", "constant", "holds", "grid", "fam", "extra"}
    assert rec["fam"] == [[0.3, 1.5], [0.7, 1.2]]
