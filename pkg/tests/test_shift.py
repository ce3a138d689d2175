from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from linthermo.potentials import neg_dist, quadratic
from linthermo.shift import ShiftOperator, WeightSequence, geometric_tail
from linthermo.space import SpaceSpec, TruncatedVector


def shift(c=2.0, N=30, space=None):
    space = space or SpaceSpec.sup(N)
    return ShiftOperator(WeightSequence.constant(c, N), space)


def test_fixed_point_is_invariant():
    L = shift()
    v = TruncatedVector(2.0 ** -np.arange(30), L.space)
    Lv = L.apply(v).coords
    assert np.array_equal(Lv[:-1], v.coords[:-1])
    assert Lv[-1] == 0.0


def test_zero_maps_to_zero():
    L = shift()
    assert L.apply(TruncatedVector.zero(L.space)) == TruncatedVector.zero(L.space)
    assert L.preimage(TruncatedVector.zero(L.space), 0.0) == TruncatedVector.zero(L.space)
    assert L.preimage_n(TruncatedVector.zero(L.space), [0, 0, 0]) == \
        TruncatedVector.zero(L.space)


def test_period_two_pair():
    N = 20
    L = ShiftOperator(WeightSequence.alternating(2.0, 3.0, N), SpaceSpec.sup(N))
    v = L.periodic_point([1.0, 0.0], 2).point
    w = L.apply(v)
    # binary rounding of 1/6^j; the exact statement is checked with fractions
    assert np.allclose(L.apply(w).coords[:-2], v.coords[:-2], rtol=1e-15, atol=0)
    # v = (1, 0, 1/6, 0, 1/36, ...), w = L(v)
    assert v.coords[:5].tolist() == [1.0, 0.0, 1 / 6, 0.0, 1 / 36]
    assert w.coords[:4].tolist() == [0.0, 2 / 6, 0.0, 2 / 36]


def test_calibrating_preimage():
    L = shift(N=6)
    y = TruncatedVector.from_head([4.0, -2.0, 1.0], L.space)
    assert L.preimage(y, 1.0).tolist() == [1.0, 2.0, -1.0, 0.5, 0.0, 0.0]


def test_preimage_n_single_step_matches_preimage():
    L = shift(N=6)
    y = TruncatedVector.from_head([1.0, 3.0], L.space)
    assert L.preimage_n(y, [0.7]) == L.preimage(y, 0.7)


def test_preimage_n_two_steps_on_fixed_point():
    L = shift()
    v = L.periodic_point([1.0], 1).point
    x = L.preimage_n(v, [1.0, 1.0])
    assert x.coords[0] == 1.0 and x.coords[1] == 0.5
    back = L.apply(L.apply(x)).coords
    assert np.array_equal(back[:-2], v.coords[:-2])


def test_beta_and_dn():
    L = shift(c=3.0, N=12)
    assert all(L.beta(k, n) == 3.0 ** n for k in range(1, 6) for n in range(1, 6))
    assert L.beta(4, 1) == L.alpha[3]
    alt = ShiftOperator(WeightSequence.alternating(2.0, 5.0, 12), SpaceSpec.sup(12))
    assert alt.beta(1, 2) == 10.0
    assert shift(N=40).dn_table.tolist() == [2.0 ** n for n in range(1, 40)]


def test_dn_exhaustive_min():
    N = 25
    a = 2.0 + 1.0 / np.arange(1, N + 1)
    L = ShiftOperator(WeightSequence.explicit(a, N), SpaceSpec.sup(N))
    assert L.dn(1) == pytest.approx(np.min(a[: N - 1]))
    for n in (2, 5):
        brute = min(np.prod(a[k: k + n]) for k in range(N - n))
        assert L.dn(n) == pytest.approx(brute, rel=1e-14)
    with pytest.raises(IndexError):
        L.dn(0)


def test_chaos_geometric_series():
    rep = shift(N=50).chaos_criterion(1.0)
    n = np.arange(1, 50)
    assert np.max(np.abs(rep.partial_sums - (1 - 2.0 ** -n))) <= 1e-12
    assert rep.verdict == "converges"
    assert rep.geometric_tail_bound < 2.0 ** -(rep.n_max - 1)
    assert rep.sup_inverse_beta_sum == pytest.approx(1 - 2.0 ** -49)


def test_chaos_near_one_inconclusive():
    rep = shift(c=1.001, N=12).chaos_criterion(1.0)
    assert rep.verdict == "inconclusive"


def test_geometric_tail_on_slow_series():
    rho, bound, verdict = geometric_tail(1.0 / np.arange(1, 30) ** 2)
    assert verdict == "inconclusive"


def test_birkhoff_sum_examples(rng):
    L = shift(space=SpaceSpec.lp(1, 30), N=30)
    v = L.periodic_point([1.0], 1).point
    A = neg_dist(v, L.space)
    # zero up to the truncated tail mass 2^-(N-j) lost after j shifts
    for n in (1, 5, 20):
        assert abs(L.birkhoff_sum(A, v, n)) <= sum(2.0 ** -(30 - j - 1) for j in range(n))
    x = TruncatedVector(rng.normal(size=30), L.space)
    assert L.birkhoff_sum(A, x, 1) == A(x)
    B = quadratic()
    total, y = 0.0, x
    for _ in range(7):
        total += B(y)
        y = L.apply(y)
    assert L.birkhoff_sum(B, x, 7) == pytest.approx(total, rel=1e-13)


def test_periodic_point_examples():
    L = shift(N=30)
    assert np.array_equal(L.periodic_point([1.0], 1).point.coords, 2.0 ** -np.arange(30))
    assert L.periodic_point([0.0, 0.0], 2).point == TruncatedVector.zero(L.space)


def test_periodic_point_exact_rational():
    N = 40
    L = ShiftOperator(WeightSequence.alternating(2.0, 3.0, N), SpaceSpec.sup(N))
    pp = L.periodic_point([1.0, 0.0], 2)
    assert pp.exact_residual == 0.0
    expected = [Fraction(1, 6 ** (i // 2)) if i % 2 == 0 else Fraction(0) for i in range(N)]
    assert pp.point.coords.tolist() == [float(f) for f in expected]


weights_st = st.lists(st.floats(1.1, 4.0), min_size=12, max_size=12)


@given(weights_st, st.lists(st.floats(-50, 50, allow_subnormal=False), min_size=12,
                            max_size=12),
       st.floats(-10, 10))
def test_apply_inverts_preimage_exactly(a, y, r):
    L = ShiftOperator(WeightSequence.explicit(a, 12), SpaceSpec.sup(12))
    yv = TruncatedVector(np.array(y), L.space)
    back = L.apply(L.preimage(yv, r)).coords
    # alpha * (y / alpha) is exact only up to one rounding
    assert np.allclose(back[:-1], yv.coords[:-1], rtol=2.3e-16, atol=0)


@given(st.lists(st.integers(2, 5), min_size=12, max_size=12),
       st.lists(st.integers(-50, 50), min_size=12, max_size=12), st.integers(-10, 10))
def test_apply_inverts_preimage_dyadic(a, y, r):
    # power-of-two weights make the round trip exact bit for bit
    w = [2.0 ** (k % 3 + 1) for k in a]
    L = ShiftOperator(WeightSequence.explicit(w, 12), SpaceSpec.sup(12))
    yv = TruncatedVector(np.array(y, dtype=float), L.space)
    assert np.array_equal(L.apply(L.preimage(yv, r)).coords[:-1], yv.coords[:-1])


@given(weights_st, st.integers(1, 8))
def test_dn_below_every_beta(a, n):
    L = ShiftOperator(WeightSequence.explicit(a, 12), SpaceSpec.sup(12))
    if n > 11:
        return
    assert all(L.dn(n) <= L.beta(k, n) for k in range(1, 12 - n + 1))


@given(weights_st, st.integers(1, 5), st.sampled_from(["sup", 1.0, 2.0]),
       st.lists(st.floats(-10, 10), min_size=12, max_size=12))
def test_lower_bound_on_tail_part(a, n, p, x):
    space = SpaceSpec.sup(12) if p == "sup" else SpaceSpec.lp(p, 12)
    L = ShiftOperator(WeightSequence.explicit(a, 12), space)
    X = np.array(x)
    X[:n] = 0.0
    X[-n:] = 0.0  # keep the support inside the truncation window after n shifts
    lhs = space.norm(L.power_array(X, n))
    assert lhs >= L.dn(n) * space.norm(X) * (1 - 1e-12)


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=3),
       st.sampled_from([(2.0, 3.0), (2.0, 2.0), (3.0, 5.0)]))
def test_periodic_residual_zero(head, c):
    k = len(head)
    N = 24
    L = ShiftOperator(WeightSequence.alternating(*c, N), SpaceSpec.sup(N))
    pp = L.periodic_point([float(h) for h in head], k)
    assert pp.exact_residual == 0.0
