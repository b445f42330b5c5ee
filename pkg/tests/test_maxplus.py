import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sldiflow.maxplus import (
    NEG_INF,
    POS_INF,
    DimensionError,
    InfeasibleCircuit,
    block_star,
    eps,
    format_matrix,
    identity,
    in_gamma,
    kleene_star,
    mat_dplus,
    mat_dtimes,
    mat_oplus,
    mat_otimes,
    mat_power,
    parse_matrix,
    preceq,
    scalar_dplus,
    scalar_dtimes,
    scalar_oplus,
    scalar_otimes,
    sharp,
    top,
)

NI, PI = NEG_INF, POS_INF

ext_real = st.one_of(st.integers(-50, 50).map(float), st.just(NI), st.just(PI))
max_real = st.one_of(st.integers(-50, 50).map(float), st.just(NI))


def rmax_matrix(n_max=5):
    return st.integers(1, n_max).flatmap(
        lambda n: hnp.arrays(np.float64, (n, n), elements=max_real)
    )


# -- scalars ---------------------------------------------------------------------

def test_scalar_examples():
    assert scalar_otimes(3, 4) == 7
    assert scalar_otimes(NI, PI) == NI
    assert scalar_dtimes(NI, PI) == PI
    assert scalar_dplus(2, 5) == 2
    assert scalar_oplus(2, 5) == 5


@given(ext_real, ext_real, ext_real)
def test_scalar_semiring_laws(a, b, c):
    assert scalar_oplus(a, b) == scalar_oplus(b, a)
    assert scalar_oplus(scalar_oplus(a, b), c) == scalar_oplus(a, scalar_oplus(b, c))
    assert scalar_oplus(a, a) == a
    assert scalar_dplus(a, b) == scalar_dplus(b, a)
    assert scalar_dplus(a, a) == a
    assert scalar_otimes(scalar_otimes(a, b), c) == scalar_otimes(a, scalar_otimes(b, c))
    assert scalar_dtimes(scalar_dtimes(a, b), c) == scalar_dtimes(a, scalar_dtimes(b, c))
    assert scalar_otimes(a, scalar_oplus(b, c)) == scalar_oplus(scalar_otimes(a, b), scalar_otimes(a, c))
    assert scalar_dtimes(a, scalar_dplus(b, c)) == scalar_dplus(scalar_dtimes(a, b), scalar_dtimes(a, c))
    assert scalar_otimes(a, 0) == a and scalar_dtimes(a, 0) == a
    assert scalar_otimes(a, NI) == NI and scalar_dtimes(a, PI) == PI


# -- matrices ---------------------------------------------------------------------

def test_mat_sum_examples():
    a = np.array([[0.0, 1], [2, 3]])
    assert np.array_equal(mat_oplus(eps(2), a), a)
    assert np.array_equal(mat_oplus(a, [[3, 0], [1, 2]]), [[3, 1], [2, 3]])
    assert np.array_equal(mat_dplus(top(2), a), a)
    with pytest.raises(DimensionError):
        mat_oplus(a, eps(3))


def test_mat_otimes_examples():
    a = np.array([[0.0, NI], [3, 0]])
    assert np.array_equal(mat_otimes(identity(2), a), a)
    assert np.array_equal(mat_otimes(a, [[1.0], [0.0]]), [[1], [4]])
    assert np.array_equal(mat_otimes(eps(2), a), eps(2))
    with pytest.raises(DimensionError):
        mat_otimes(a, eps(3))


def test_mat_dtimes_resolves_infinities_upward():
    a = np.array([[NI, 0.0]])
    c = np.array([[PI], [5.0]])
    # min(-inf (x) +inf, 0 + 5) with +inf absorbing -> min(+inf, 5) = 5
    assert mat_dtimes(a, c)[0, 0] == 5
    assert mat_otimes(np.array([[NI, 0.0]]), np.array([[1.0], [5.0]]))[0, 0] == 5


def test_sharp_examples():
    a = np.array([[1.0, PI], [NI, 0]])
    assert np.array_equal(sharp(a), [[-1, PI], [NI, 0]])
    assert np.array_equal(sharp(sharp(a)), a)
    assert np.array_equal(sharp(top(3)), eps(3))


def test_kleene_star_examples():
    assert np.array_equal(kleene_star(eps(3)), identity(3))
    assert np.array_equal(kleene_star([[NI, 2], [-3, NI]]), [[0, 2], [-3, 0]])
    with pytest.raises(InfeasibleCircuit):
        kleene_star([[NI, 2], [-1, NI]])
    with pytest.raises(InfeasibleCircuit) as info:
        kleene_star([[1.0]])
    assert info.value.node == 0


def test_kleene_star_rejects_bad_input():
    with pytest.raises(DimensionError):
        kleene_star(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        kleene_star([[0, PI], [0, 0]])


def test_in_gamma_examples():
    assert in_gamma(eps(3))
    assert in_gamma([[NI, 2], [-3, NI]])
    assert not in_gamma([[NI, 2], [-1, NI]])


def test_block_star_examples():
    tl, tr, bl, br = block_star([[0.0]], eps(1), eps(1), [[0.0]])
    assert (tl, tr, bl, br) == ([[0]], [[NI]], [[NI]], [[0]])
    tl, tr, bl, br = block_star([[NI]], [[5.0]], eps(1), [[NI]])
    assert [x.tolist() for x in (tl, tr, bl, br)] == [[[0]], [[5]], [[NI]], [[0]]]


@settings(max_examples=150, deadline=None)
@given(rmax_matrix())
def test_star_fixpoint_and_power_series(a):
    n = a.shape[0]
    if not in_gamma(a):
        with pytest.raises(InfeasibleCircuit):
            kleene_star(a)
        return
    s = kleene_star(a)
    assert np.array_equal(mat_oplus(mat_otimes(a, s), identity(n)), s)
    assert np.array_equal(mat_otimes(s, s), s)
    series = identity(n)
    for i in range(1, n):
        series = mat_oplus(series, mat_power(a, i))
    assert np.array_equal(s, series)
    assert not np.isposinf(s).any()
    assert (np.diagonal(s) >= 0).all()


@settings(max_examples=100, deadline=None)
@given(rmax_matrix(6), st.data())
def test_block_star_matches_dense(a, data):
    n = a.shape[0]
    if n < 2 or not in_gamma(a):
        return
    cut = data.draw(st.integers(1, n - 1))
    blocks = block_star(a[:cut, :cut], a[:cut, cut:], a[cut:, :cut], a[cut:, cut:])
    s = kleene_star(a)
    assert np.array_equal(blocks[0], s[:cut, :cut])
    assert np.array_equal(blocks[1], s[:cut, cut:])
    assert np.array_equal(blocks[2], s[cut:, :cut])
    assert np.array_equal(blocks[3], s[cut:, cut:])


@settings(max_examples=150, deadline=None)
@given(rmax_matrix(), st.data())
def test_matrix_semiring_and_order(a, data):
    n = a.shape[0]
    b = data.draw(hnp.arrays(np.float64, (n, n), elements=max_real))
    c = data.draw(hnp.arrays(np.float64, (n, n), elements=max_real))
    assert np.array_equal(mat_otimes(mat_otimes(a, b), c), mat_otimes(a, mat_otimes(b, c)))
    assert np.array_equal(mat_otimes(a, mat_oplus(b, c)), mat_oplus(mat_otimes(a, b), mat_otimes(a, c)))
    assert np.array_equal(mat_oplus(a, eps(n)), a)
    assert np.array_equal(mat_otimes(a, identity(n)), a)
    assert preceq(a, b) == np.array_equal(mat_oplus(a, b), b)
    sa, sb = -a, -b  # R_min matrices
    assert np.array_equal(mat_dtimes(mat_dtimes(sa, sb), -c), mat_dtimes(sa, mat_dtimes(sb, -c)))
    assert np.array_equal(mat_dplus(sa, top(n)), sa)


@settings(max_examples=200, deadline=None)
@given(rmax_matrix(), st.data())
def test_residuation(a, data):
    n = a.shape[0]
    vec = hnp.arrays(np.float64, (n, 1), elements=st.integers(-60, 60).map(float))
    x, y = data.draw(vec), data.draw(vec)
    assert preceq(x, mat_dtimes(sharp(a), y)) == preceq(mat_otimes(a, x), y)


def test_matrix_literals_round_trip():
    a = parse_matrix("0,-inf;3,0")
    assert np.array_equal(a, [[0, NI], [3, 0]])
    assert format_matrix(a) == "0,-inf;3,0"
    assert np.array_equal(parse_matrix(" 1.5 , +inf ; inf , -2 "), [[1.5, PI], [PI, -2]])
    with pytest.raises(ValueError):
        parse_matrix("1,x")
    with pytest.raises(DimensionError):
        parse_matrix("1,2;3")
    with pytest.raises(ValueError):
        parse_matrix("nan")
    assert math.isinf(parse_matrix("-INF")[0, 0])
