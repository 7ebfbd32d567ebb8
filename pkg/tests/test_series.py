from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgevar.errors import DomainError, ShapeError
from hodgevar.series import ArraySeries, TruncatedSeries, trust_radius

from oracles import convolve_coeffs


def ts(coeffs, num_vars=2, cutoff=4):
    return TruncatedSeries(num_vars, cutoff, coeffs)


def random_series(rng, num_vars=3, cutoff=4, terms=8):
    coeffs = {}
    for _ in range(terms):
        e = [0] * num_vars
        for _ in range(int(rng.integers(0, cutoff + 1))):
            e[int(rng.integers(0, num_vars))] += 1
        if sum(e) <= cutoff:
            coeffs[tuple(e)] = complex(rng.standard_normal(), rng.standard_normal())
    return TruncatedSeries(num_vars, cutoff, coeffs)


# -- mul --------------------------------------------------------------------

def test_difference_of_squares():
    one_plus = ts({(0, 0): 1, (1, 0): 1}, cutoff=2)
    one_minus = ts({(0, 0): 1, (1, 0): -1}, cutoff=2)
    assert one_plus * one_minus == ts({(0, 0): 1, (2, 0): -1}, cutoff=2)


def test_mul_annihilation():
    a = ts({(1, 1): 2.5})
    assert (a * TruncatedSeries.zero(2, 4)).coeffs == {}


def test_mul_matches_convolution_oracle():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a = random_series(rng, num_vars=3, cutoff=4)
        b = random_series(rng, num_vars=3, cutoff=4)
        expected = convolve_coeffs(a.coeffs, b.coeffs, 4)
        got = (a * b).coeffs
        keys = set(expected) | set(got)
        assert all(abs(expected.get(k, 0) - got.get(k, 0)) < 1e-12 for k in keys)


def test_mul_shape_errors():
    with pytest.raises(ShapeError):
        ts({}, num_vars=2) * TruncatedSeries(3, 4)
    with pytest.raises(ShapeError):
        ts({}, cutoff=4) * TruncatedSeries(2, 3)


@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_mul_commutative_associative(sa, sb, sc):
    ra, rb, rc = (np.random.default_rng(s) for s in (sa, sb, sc))
    a, b, c = (random_series(r, num_vars=2, cutoff=3, terms=5) for r in (ra, rb, rc))
    assert (a * b).almost_equal(b * a, floor=0.0)
    lhs = (a * b) * c
    rhs = a * (b * c)
    assert lhs.almost_equal(rhs, floor=1e-12)


# -- neumann_inverse ---------------------------------------------------------

def test_neumann_geometric():
    u = TruncatedSeries.variable(0, 1, 5)
    inv = u.neumann_inverse()
    assert inv == TruncatedSeries(1, 5, {(k,): (-1) ** k for k in range(6)})


def test_neumann_of_zero_is_one():
    assert TruncatedSeries.zero(2, 3).neumann_inverse() == TruncatedSeries.one(2, 3)


def test_neumann_multiply_back():
    rng = np.random.default_rng(1)
    for _ in range(8):
        u = random_series(rng, num_vars=2, cutoff=5)
        u = u - TruncatedSeries.constant(u.coefficient((0, 0)), 2, 5)
        prod = (TruncatedSeries.one(2, 5) + u) * u.neumann_inverse()
        assert prod.almost_equal(TruncatedSeries.one(2, 5), floor=1e-10)


def test_neumann_rejects_constant_term():
    with pytest.raises(DomainError):
        ts({(0, 0): 0.5}).neumann_inverse()


# -- partial_derivative ------------------------------------------------------

def test_partial_derivative_basics():
    s = ts({(2, 1): 1.0})
    assert s.partial_derivative(0) == ts({(1, 1): 2.0})
    assert ts({(1, 0): 1.0}).partial_derivative(1) == TruncatedSeries.zero(2, 4)


def test_partial_derivative_vs_finite_difference():
    rng = np.random.default_rng(2)
    for _ in range(5):
        s = random_series(rng, num_vars=3, cutoff=4)
        pt = 0.3 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        for mu in range(3):
            h = 1e-6
            up, dn = pt.copy(), pt.copy()
            up[mu] += h
            dn[mu] -= h
            fd = (s.evaluate(up) - s.evaluate(dn)) / (2 * h)
            exact = s.partial_derivative(mu).evaluate(pt)
            assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


@given(st.integers(0, 10**6), st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_leibniz_rule(sa, sb):
    a = random_series(np.random.default_rng(sa), num_vars=2, cutoff=3, terms=5)
    b = random_series(np.random.default_rng(sb), num_vars=2, cutoff=3, terms=5)
    for mu in range(2):
        lhs = (a * b).partial_derivative(mu)
        rhs = a.partial_derivative(mu) * b + a * b.partial_derivative(mu)
        # product rule holds only below the cutoff boundary
        lhs = TruncatedSeries(2, 3, {e: c for e, c in lhs.coeffs.items() if sum(e) < 3})
        rhs = TruncatedSeries(2, 3, {e: c for e, c in rhs.coeffs.items() if sum(e) < 3})
        assert lhs.almost_equal(rhs, floor=1e-12)


# -- evaluate ----------------------------------------------------------------

def test_evaluate_basics():
    s = ts({(0, 0): 1, (1, 0): 1})
    assert s.evaluate([0, 0]) == 1
    assert abs(ts({(1, 1): 1}).evaluate([2, 3j]) - 6j) < 1e-15


def test_evaluate_product_consistency():
    rng = np.random.default_rng(3)
    for _ in range(6):
        a = random_series(rng, num_vars=2, cutoff=6)
        b = random_series(rng, num_vars=2, cutoff=6)
        p = 0.2 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        norm1 = float(np.sum(np.abs(p)))
        maxc = max(a.max_abs_coeff() * b.max_abs_coeff(), 1.0)
        tail = maxc * sum(norm1 ** k for k in range(7, 40))
        lhs = (a * b).evaluate(p)
        rhs = a.evaluate(p) * b.evaluate(p)
        assert abs(lhs - rhs) <= max(tail * 50, 1e-9)


def test_evaluate_length_mismatch():
    with pytest.raises(ShapeError):
        ts({}).evaluate([1.0])


# -- ArraySeries -------------------------------------------------------------

def test_array_series_roundtrip_components():
    rng = np.random.default_rng(4)
    comps = [random_series(rng, num_vars=2, cutoff=3, terms=4) for _ in range(3)]
    vs = ArraySeries.from_components(comps)
    for i, c in enumerate(comps):
        assert vs.component(i).almost_equal(c, floor=0.0)


def test_array_series_matmul_matches_entrywise():
    rng = np.random.default_rng(5)
    A = ArraySeries(2, 3, (2, 2), {(1, 0): rng.standard_normal((2, 2)) + 0j,
                                   (0, 1): rng.standard_normal((2, 2)) + 0j})
    B = ArraySeries(2, 3, (2, 2), {(1, 0): rng.standard_normal((2, 2)) + 0j,
                                   (0, 2): rng.standard_normal((2, 2)) + 0j})
    P = A.matmul(B)
    for r in range(2):
        for c in range(2):
            manual = TruncatedSeries.zero(2, 3)
            for k in range(2):
                manual = manual + A.component((r, k)) * B.component((k, c))
            assert P.component((r, c)).almost_equal(manual, floor=1e-12)


def test_trust_radius_scaling():
    s = ArraySeries(1, 3, (1,), {(1,): np.array([4.0 + 0j])})
    # growth estimate 4 at degree 1 -> radius 0.125
    assert abs(trust_radius(s) - 0.125) < 1e-15
    zero = ArraySeries.zero(1, 3, (1,))
    assert trust_radius(zero) == 1e3
