import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cknlab.blockgeom import (
    BlockDecomposition,
    ExponentSet,
    ckn_weight_exponent,
    easy_constant_bound,
    hardy_constant_1block,
    holder_exponents,
    sigma_exponents,
    sphere_area,
    weight_rgamma,
)
from cknlab.errors import DomainError, PairwisePathRequired

B = BlockDecomposition


def multiradial():
    return st.lists(st.integers(1, 9), min_size=2, max_size=6).filter(lambda g: len(g) < sum(g))


def test_weight_examples():
    assert weight_rgamma(B((2, 2)), (1.0, 1.0)) == 1.0
    assert weight_rgamma(B((2, 2)), (4.0, 1.0)) == pytest.approx(2.0, abs=1e-15)
    r = np.array([0.3, 2.0, 7.5])
    assert np.allclose(weight_rgamma(B((3, 1)), (r, 5.0 * r)), r, rtol=1e-15)


def test_weight_rejects_bad_input():
    with pytest.raises(DomainError):
        weight_rgamma(B((2, 2)), (1.0,))
    with pytest.raises(DomainError):
        weight_rgamma(B((1, 1)), (1.0, 1.0))
    with pytest.raises(DomainError):
        weight_rgamma(B((4,)), (1.0,))


@given(multiradial(), st.floats(0.01, 100), st.lists(st.floats(0.01, 10), min_size=6, max_size=6))
def test_weight_homogeneous(g, lam, radii):
    d = B(tuple(g))
    r = radii[: d.m]
    assert weight_rgamma(d, [lam * x for x in r]) == pytest.approx(lam * weight_rgamma(d, r), rel=1e-12)


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_weight_22_against_euclidean(r1, r2):
    w = weight_rgamma(B((2, 2)), (r1, r2))
    assert w**2 == pytest.approx(r1 * r2, rel=1e-12)
    assert 1 / w**2 >= 1 / (2 * (r1**2 + r2**2)) * (1 - 1e-12)


def test_sigma_examples():
    assert sigma_exponents(B((3, 2))) == [Fraction(2, 3), Fraction(1, 3)]
    assert sigma_exponents(B((2, 2))) == [Fraction(1, 2), Fraction(1, 2)]
    with pytest.raises(DomainError):
        sigma_exponents(B((1, 1, 1)))


@given(multiradial())
def test_sigma_sum_exact(g):
    assert sum(sigma_exponents(B(tuple(g)))) == 1


def test_holder_examples():
    ps, order = holder_exponents(B((2, 2, 2)))
    assert ps == [3, 3, 3] and order == (0, 1, 2)
    ps, order = holder_exponents(B((2, 4, 2)))
    # descending order (4, 2, 2), |gamma| - m = 5, gamma_0 = gamma_3 = 2
    assert order == (1, 0, 2)
    assert ps == [Fraction(5, 2), Fraction(5, 2), Fraction(5)]
    assert sum(1 / p for p in ps) == 1


def test_holder_needs_three_blocks():
    with pytest.raises(PairwisePathRequired):
        holder_exponents(B((3, 2, 1)))
    with pytest.raises(PairwisePathRequired):
        holder_exponents(B((2, 2)))


@given(st.lists(st.integers(2, 9), min_size=3, max_size=6), st.lists(st.just(1), max_size=3))
def test_holder_sum_exact(big, ones):
    ps, _ = holder_exponents(B(tuple(big + ones)))
    assert sum(Fraction(1) / p for p in ps) == 1


def test_hardy_constant_1block():
    assert hardy_constant_1block(2, 4) == 1.0
    assert hardy_constant_1block(1, 2) == 1.0
    assert hardy_constant_1block(3, 1) == pytest.approx(27 / 8)
    with pytest.raises(DomainError):
        hardy_constant_1block(3, 3)


def test_easy_constant_bound():
    assert easy_constant_bound(B((2, 2)), 1) == pytest.approx(1.0)
    assert easy_constant_bound(B((3, 3)), 1) == pytest.approx(0.5)
    assert easy_constant_bound(B((2, 2)), 2) is None
    # a gamma_i = 1 block does not enter the product
    assert easy_constant_bound(B((3, 1)), 1.5) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        easy_constant_bound(B((3, 1)), 0.5)


def test_easy_constant_skips_unit_blocks():
    # gamma_i = q = 1 is not degenerate: unit blocks carry no weight
    assert easy_constant_bound(B((1, 3)), 1.0) == pytest.approx(1.0 / 2.0)


def test_ckn_weight_exponent():
    d = B((2, 2))
    assert ckn_weight_exponent(d, 2, 2) == 1
    assert ckn_weight_exponent(d, 2, 1) == -1
    ex = ExponentSet(d, Fraction(3, 2))
    assert ckn_weight_exponent(d, ex.q_star, ex.q) == 0
    with pytest.raises(DomainError):
        ckn_weight_exponent(d, 1, 2)


@given(multiradial(), st.fractions(1, 5, max_denominator=20))
def test_ckn_exponent_affine_in_inverse_p(g, q):
    d = B(tuple(g))
    ex = ExponentSet(d, q)
    ps = [q, q + 1, q + 3]
    e = [ckn_weight_exponent(d, p, q) for p in ps]
    inv = [1 / Fraction(p) for p in ps]
    assert (e[1] - e[0]) * (inv[2] - inv[0]) == (e[2] - e[0]) * (inv[1] - inv[0])
    if ex.q_star is not None:
        assert ckn_weight_exponent(d, ex.q_star, q) == 0


def test_sphere_area():
    assert sphere_area(1) == 2.0
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)
    with pytest.raises(DomainError):
        sphere_area(0)


def test_decomposition_parse():
    assert B.parse("3, 2,1").gammas == (3, 2, 1)
    with pytest.raises(DomainError):
        B.parse("2,x")
    with pytest.raises(DomainError):
        B((0, 2))
