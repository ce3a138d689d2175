import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from linthermo.space import (SpaceSpec, TruncatedVector, distance, norm, project_depth,
                             random_vectors)

N = 8
coords = st.lists(st.floats(-1e3, 1e3, allow_subnormal=False), min_size=N, max_size=N)
spaces = st.sampled_from([SpaceSpec.sup(N), SpaceSpec.lp(1, N), SpaceSpec.lp(2, N),
                          SpaceSpec.lp(3.5, N)])


def test_sup_norm_of_halving_sequence():
    sp = SpaceSpec.sup(20)
    v = TruncatedVector(2.0 ** -np.arange(20), sp)
    assert norm(v) == 1.0


def test_zero_norm():
    assert norm(TruncatedVector.zero(SpaceSpec.lp(2, 5))) == 0.0


def test_pythagorean_triple():
    assert norm(TruncatedVector.from_head([3, 4], SpaceSpec.lp(2, 8))) == pytest.approx(5.0)


def test_distance_basis_vectors():
    for sp, expected in [(SpaceSpec.sup(6), 1.0), (SpaceSpec.lp(1, 6), 2.0)]:
        u, v = TruncatedVector.basis(1, sp), TruncatedVector.basis(2, sp)
        assert distance(u, v) == expected
        assert distance(v, v) == 0.0


def test_project_depth_examples():
    sp = SpaceSpec.lp(2, 4)
    v = TruncatedVector.from_head([1, 2, 3, 4], sp)
    assert project_depth(v, 2).tolist() == [1, 2, 0, 0]
    assert project_depth(v, 4) == v
    tail = norm(TruncatedVector.from_head([0, 0, 3, 4], sp))
    assert norm(v - project_depth(v, 2)) == pytest.approx(tail)


def test_invalid_spaces_rejected():
    with pytest.raises(ValueError):
        SpaceSpec("lp", 4, 0.5)
    with pytest.raises(ValueError):
        SpaceSpec("sup", 0)
    with pytest.raises(ValueError):
        TruncatedVector.from_head([1.0] * 5, SpaceSpec.sup(3))


def test_mismatched_spaces_rejected():
    a = TruncatedVector.zero(SpaceSpec.sup(4))
    b = TruncatedVector.zero(SpaceSpec.lp(1, 4))
    with pytest.raises(ValueError):
        distance(a, b)


def test_csv_round_trip():
    sp = SpaceSpec.lp(1, 5)
    v = TruncatedVector.from_head([0.1, -2.5, 1e-17], sp)
    back = TruncatedVector.from_list([float(s) for s in v.to_csv_row().split(",")], sp)
    assert back == v


def test_random_vectors_decay_and_center(rng):
    sp = SpaceSpec.sup(10)
    c = np.arange(10.0)
    X = random_vectors(sp, 200, 1.0, rng, decay=0.5, center=c)
    assert X.shape == (200, 10)
    assert np.all(np.abs(X - c) <= 0.5 ** np.arange(10) + 1e-15)


@given(spaces, coords, coords, coords)
def test_triangle_inequality(sp, a, b, c):
    u, v, w = (TruncatedVector(np.array(x), sp) for x in (a, b, c))
    assert distance(u, w) <= distance(u, v) + distance(v, w) + 1e-9 * (1 + distance(u, w))


@given(spaces, coords, st.integers(1, N))
def test_norm_monotone_in_depth(sp, a, M):
    v = TruncatedVector(np.array(a), sp)
    assert norm(project_depth(v, M)) <= norm(v) * (1 + 1e-12)


# scalars kept away from the underflow range of |x|^p
@given(spaces, coords, st.floats(1e-6, 100) | st.floats(-100, -1e-6) | st.just(0.0))
def test_homogeneity(sp, a, c):
    v = TruncatedVector(np.array(a), sp)
    assert norm(v * c) == pytest.approx(abs(c) * norm(v), rel=1e-12, abs=1e-300)
