"""Lie series, Lie transforms, inverse transforms and compositions of Lie series."""
from __future__ import annotations

import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_field, random_poly, random_sequence
from lietx.algebra import Coordinates, Field, Functions, Poly, commutator, lie_derivative, poly_ring
from lietx.lie import (
    GeneratingSequence,
    LieOperatorTrace,
    apply_lie,
    apply_words,
    compose_lie_series_apply,
    exp_lie,
    lie_transform_apply,
    lie_transform_inverse_apply,
    operator_words,
    reordered_E,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def field(ring, *comps):
    return Field(ring, [Poly(ring, c) for c in comps])


# ---------------------------------------------------------------------------
# generating sequences


def test_sequence_indexing_and_zero_elements():
    ring = poly_ring(1, exact=True)
    X = GeneratingSequence(ring, [field(ring, {(2,): 1}), Field.zero(ring), field(ring, {(4,): 1})])
    assert X.indices() == [1, 3]
    assert X[2].is_zero() and X.get(2) is None
    assert X.max_index == 3
    X.check_grading()


def test_sequence_rejects_bad_input():
    ring = poly_ring(1)
    with pytest.raises(ValueError):
        GeneratingSequence(ring, {0: field(ring, {(2,): 1})})
    with pytest.raises(TypeError):
        GeneratingSequence(ring, {1: Poly(ring, {(2,): 1})})
    with pytest.raises(ValueError):
        GeneratingSequence(ring, {1: field(ring, {(3,): 1})}).check_grading()


# ---------------------------------------------------------------------------
# Lie series


def test_exp_lie_zero_field():
    ring = poly_ring(2, exact=True)
    f = random_poly(ring, 3, np.random.default_rng(0))
    assert exp_lie(Field.zero(ring), f, 4) == f.truncate(4)


def test_exp_lie_quadratic_on_coordinate():
    ring = poly_ring(1, exact=True)
    X = field(ring, {(2,): 1})
    y = exp_lie(X, Coordinates(ring), 3)
    assert y.as_functions()[0] == Poly(ring, {(1,): 1, (2,): 1, (3,): 1, (4,): 1})


def test_exp_lie_linear_field_gives_exponential():
    ring = poly_ring(2)
    A = (0.3 + 0.2j, -0.7)
    X = field(ring, {(1, 0): A[0]}, {(0, 1): A[1]})
    y = exp_lie(X, Coordinates(ring), 0, max_terms=40).as_functions()
    for j in range(2):
        key = tuple(int(i == j) for i in range(2))
        assert abs(y[j].coeff(key) - cmath.exp(A[j])) < 1e-14


def test_exp_lie_order_zero_needs_max_terms():
    ring = poly_ring(1, exact=True)
    X = field(ring, {(1,): Fraction(1, 2)})
    with pytest.raises(ValueError):
        exp_lie(X, Coordinates(ring), 0)


# ---------------------------------------------------------------------------
# Lie transform


def test_transform_with_single_element_is_lie_series():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(1)
    for k in (1, 2, 3):
        Xk = random_field(ring, k, rng)
        X = GeneratingSequence(ring, {k: Xk})
        f = random_poly(ring, 2, rng)
        assert lie_transform_apply(X, f, 6) == exp_lie(Xk, f, 6, order_tag=k)
        assert lie_transform_apply(X, Coordinates(ring), 6).equals(exp_lie(Xk, Coordinates(ring), 6, order_tag=k))


def test_transform_zero_sequence_is_identity():
    ring = poly_ring(2, exact=True)
    f = random_poly(ring, 3, np.random.default_rng(2))
    assert lie_transform_apply(GeneratingSequence(ring), f, 5) == f.truncate(5)


def test_transform_on_coordinates_low_orders():
    """y = x + X_1 + (L_{X_1} X_1 / 2 + X_2) + O(3)."""
    ring = poly_ring(2, exact=True)
    X = random_sequence(ring, 3, np.random.default_rng(3), 0.5)
    y = lie_transform_apply(X, Coordinates(ring), 3)
    assert y.part(1) == X[1].as_functions()
    L11 = Functions(ring, [lie_derivative(X[1], c) for c in X[1].as_functions()])
    assert y.part(2) == L11.scale(Fraction(1, 2)) + X[2].as_functions()


@given(seeds)
def test_triangularity(seed):
    """E_s and G_s raise the order by exactly s."""
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    X = random_sequence(ring, 4, rng)
    f = random_poly(ring, 1, rng, min_order=1)  # homogeneous of order 1
    trace = LieOperatorTrace(X, f, 6)
    for s in range(0, 5):
        img = trace[s]
        assert img.is_zero() or img.orders() == {1 + s}
    for s in range(1, 5):
        img = apply_words(X, operator_words(X, s, "G"), f, 6)
        assert img.is_zero() or img.orders() == {1 + s}


@given(seeds)
def test_inverse_round_trip(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    X = random_sequence(ring, 4, rng)
    f = random_poly(ring, 3, rng)
    N = 4
    assert lie_transform_inverse_apply(X, lie_transform_apply(X, f, N), N) == f.truncate(N)
    assert lie_transform_apply(X, lie_transform_inverse_apply(X, f, N), N) == f.truncate(N)


def test_inverse_low_orders():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(4)
    X = random_sequence(ring, 2, rng, 0.6)
    x = Coordinates(ring)
    y = lie_transform_inverse_apply(X, x, 2)
    assert y.part(1) == -X[1].as_functions()
    half = Fraction(1, 2)
    L1 = apply_lie(X[1], apply_lie(X[1], x, 2), 2).part(2)
    assert y.part(2) == L1.scale(half) - X[2].as_functions()


def test_operator_words_G2():
    ring = poly_ring(1, exact=True)
    X = GeneratingSequence(ring, {1: field(ring, {(2,): 1}), 2: field(ring, {(3,): 1})})
    assert operator_words(X, 2, "G") == {(1, 1): Fraction(1, 2), (2,): Fraction(-1)}
    assert operator_words(X, 2, "E") == {(1, 1): Fraction(1, 2), (2,): Fraction(1)}


@given(seeds)
def test_product_preservation(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    X = random_sequence(ring, 4, rng)
    f, g = random_poly(ring, 2, rng), random_poly(ring, 2, rng)
    N = 4
    assert lie_transform_apply(X, f * g, N) == lie_transform_apply(X, f, N).mul(lie_transform_apply(X, g, N), N)


@given(seeds)
def test_commutator_preservation(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    X = random_sequence(ring, 4, rng)
    V = random_field(ring, 2, rng, exact_order=False)
    W = random_field(ring, 1, rng, exact_order=False)
    N = 4
    lhs = lie_transform_apply(X, commutator(V, W), N)
    rhs = commutator(lie_transform_apply(X, V, N), lie_transform_apply(X, W, N), N)
    assert lhs == rhs


@given(seeds)
def test_transform_of_derivative_identity(seed):
    """E_s L_V f = sum_j L_{E_j V} E_{s-j} f."""
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    N = 5
    X = random_sequence(ring, N, rng, 0.3)
    V = random_field(ring, 1, rng, exact_order=False)
    f = random_poly(ring, 1, rng)
    lhs = LieOperatorTrace(X, lie_derivative(V, f, N), N)
    tv, tf = LieOperatorTrace(X, V, N), LieOperatorTrace(X, f, N)
    for s in range(N + 1):
        acc = ring.zero()
        for j in range(s + 1):
            acc = acc + lie_derivative(tv[j], tf[s - j], N)
        assert lhs[s] == acc


# ---------------------------------------------------------------------------
# compositions of Lie series


def test_compose_single_element():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(5)
    X1 = random_field(ring, 1, rng)
    f = random_poly(ring, 2, rng)
    X = GeneratingSequence(ring, {1: X1})
    assert compose_lie_series_apply(X, f, 5) == exp_lie(X1, f, 5)


def test_compose_matches_transform_to_order_two():
    ring = poly_ring(2, exact=True)
    X = random_sequence(ring, 3, np.random.default_rng(6), 0.5)
    x = Coordinates(ring)
    a = compose_lie_series_apply(X, x, 3)
    b = lie_transform_apply(X, x, 3)
    assert a.truncate(2).equals(b.truncate(2))


def test_compose_order_of_factors():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(7)
    X = random_sequence(ring, 3, rng, 0.5)
    f = random_poly(ring, 1, rng)
    N = 5
    manual = f
    for k in (1, 2, 3):
        manual = exp_lie(X[k], manual, N, order_tag=k)
    assert compose_lie_series_apply(X, f, N) == manual
    manual = f
    for k in (3, 2, 1):
        manual = exp_lie(X[k], manual, N, order_tag=k)
    assert compose_lie_series_apply(X, f, N, reverse=True) == manual


def test_compose_up_to_bound():
    ring = poly_ring(1)
    X = GeneratingSequence(ring, {1: field(ring, {(2,): 1.0})})
    with pytest.raises(ValueError):
        compose_lie_series_apply(X, Coordinates(ring), 3, up_to=4)


def test_reordered_E_s1_is_first_derivative():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(8)
    X = random_sequence(ring, 2, rng)
    f = random_poly(ring, 2, rng)
    assert reordered_E(X, 1, f, 5) == lie_derivative(X[1], f, 5)


def test_reordered_E3_sorts_words():
    ring = poly_ring(1, exact=True)
    X = GeneratingSequence(ring, {1: field(ring, {(2,): 1}), 2: field(ring, {(3,): 1})})
    words = operator_words(X, 3, "E")
    # E_3 = L_1^3 / 6 + L_1 L_2 / 3 + 2 L_2 L_1 / 3 + L_3; sorting merges the middle words
    assert words == {(1, 1, 1): Fraction(1, 6), (1, 2): Fraction(1, 3), (2, 1): Fraction(2, 3)}
    f = Poly.variable(ring, 0)
    want = apply_lie(X[2], apply_lie(X[1], f))
    want = want + apply_lie(X[1], apply_lie(X[1], apply_lie(X[1], f))).scale(Fraction(1, 6))
    assert reordered_E(X, 3, f, 4) == want.truncate(4)


@given(seeds)
def test_reordering_identity(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    N = 5
    X = random_sequence(ring, N, rng, 0.3)
    x = Coordinates(ring)
    total = x
    for s in range(1, N + 1):
        total = total + reordered_E(X, s, x, N)
    assert compose_lie_series_apply(X, x, N).equals(total)
