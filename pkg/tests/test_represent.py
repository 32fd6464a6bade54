"""Unperturbed operators, extraction of generating sequences, factorization and composition."""
from __future__ import annotations

import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_field, random_functions, random_linear_spec, random_poly, random_sequence
from lietx.algebra import Coordinates, DimensionError, Field, Functions, Poly, commutator, ft_ring, poly_ring
from lietx.lie import GeneratingSequence, compose_lie_series_apply, exp_lie, lie_transform_apply
from lietx.oracle import ExplicitMap, substitute
from lietx.represent import (
    GradingError,
    KroneckerPart,
    LinearPart,
    MapSpec,
    TaylorTruncationWarning,
    apply_R,
    apply_R_kronecker,
    apply_R_linear,
    bch_compose,
    commute_past,
    compose_transforms,
    extract_generating_sequence,
    extract_lie_series_factorization,
    factor_map,
    map_from_left_factor,
    map_from_right_factor,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def field(ring, *comps):
    return Field(ring, [Poly(ring, c) for c in comps])


# ---------------------------------------------------------------------------
# linear part


def test_linear_part_logs_principal_branch():
    L = LinearPart([-2.0, 1j])
    assert abs(cmath.exp(L.logs[0]) + 2) < 1e-15
    assert -cmath.pi < L.logs[0].imag <= cmath.pi
    with pytest.raises(ValueError):
        LinearPart([0.0])


def test_apply_R_linear_identity():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(0)
    V = random_field(ring, 2, rng, exact_order=False)
    assert apply_R_linear(LinearPart([1, 1]), V) == V


def test_apply_R_linear_examples():
    ring = poly_ring(1, exact=True)
    L = LinearPart([2])
    assert apply_R_linear(L, Poly(ring, {(2,): 1})) == Poly(ring, {(2,): 4})
    assert apply_R_linear(L, field(ring, {(2,): 1})) == field(ring, {(2,): 2})
    assert apply_R_linear(L, field(ring, {(2,): 1}), inverse=True) == field(ring, {(2,): Fraction(1, 2)})


def test_apply_R_linear_on_coordinates():
    ring = poly_ring(2, exact=True)
    L = LinearPart(["1/2", "3"])
    c = apply_R_linear(L, Coordinates(ring)).as_functions()
    assert c[0] == Poly(ring, {(1, 0): Fraction(1, 2)})
    assert c[1] == Poly(ring, {(0, 1): 3})


def test_apply_R_linear_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_R_linear(LinearPart([2, 3]), Poly.variable(poly_ring(1), 0))


def test_apply_R_linear_matches_lie_series_of_linear_field():
    """R v equals exp(L_{Az}) v with A = log(Lambda)."""
    ring = poly_ring(2)
    rng = np.random.default_rng(1)
    L = LinearPart([0.6 + 0.3j, -1.4])
    A = field(ring, {(1, 0): L.logs[0]}, {(0, 1): L.logs[1]})
    for deg in range(1, 5):
        V = random_field(ring, deg, rng)
        # the series for exp of a degree-5 eigenvalue argument loses a few digits to cancellation
        want = apply_R_linear(L, V)
        assert exp_lie(A, V, deg, max_terms=80).equals(want, 1e-10 * want.max_abs())
        f = random_poly(ring, deg, rng, min_order=deg)
        want = apply_R_linear(L, f)
        assert exp_lie(A, f, deg, max_terms=80).equals(want, 1e-10 * want.max_abs())


def test_apply_R_linear_matches_substitution():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(2)
    L = LinearPart(["2/3", "-5/4"])
    M = ExplicitMap(apply_R(L, Coordinates(ring)), 5)
    f = random_poly(ring, 4, rng)
    assert substitute(f, M) == apply_R(L, f).truncate(5)
    V = random_field(ring, 3, rng, exact_order=False)
    assert substitute(V, M) == apply_R(L, V).truncate(5)


# ---------------------------------------------------------------------------
# Kronecker part


def test_apply_R_kronecker_fourier_mode():
    ring = ft_ring(1, 1)
    w = 0.7
    K = KroneckerPart([w], 1)
    f = Poly(ring, {(1, 0, 0): 1})
    got = apply_R_kronecker(K, f)
    assert abs(got.coeff((1, 0, 0)) - cmath.exp(1j * w)) < 1e-15
    back = apply_R_kronecker(K, got, inverse=True)
    assert back.equals(f, 1e-15)


def test_apply_R_kronecker_angle_independent_field_unchanged():
    ring = ft_ring(1, 1)
    K = KroneckerPart([0.7], 1)
    V = field(ring, {(0, 1, 1): 2.0, (0, 0, 2): -1.0}, {})
    assert apply_R_kronecker(K, V) == V


def test_apply_R_kronecker_action_dependent_coupling():
    """v = (0, w(I)): angle block becomes -B w(I), action block stays w(I)."""
    ring = ft_ring(1, 1)
    K = KroneckerPart([{(0,): 0.5, (1,): 2.0}], 1)  # omega(I) = 0.5 + 2 I, B = 2
    assert K.B_at([0.3])[0, 0] == pytest.approx(2.0)
    w = Poly(ring, {(0, 1, 1): 3.0})  # 3 I eps, mode 0 so no phase
    got = apply_R_kronecker(K, Field(ring, [ring.zero(), w]))
    assert got[0].equals(w.scale(-2.0))
    assert got[1].equals(w)
    back = apply_R_kronecker(K, got, inverse=True)
    assert back[0].is_zero() and back[1].equals(w)


def test_kronecker_nonconstant_phase_warns():
    ring = ft_ring(1, 1)
    K = KroneckerPart([{(0,): 0.5, (1,): 0.1}], 1, degree_cap=4)
    with pytest.warns(TaylorTruncationWarning):
        apply_R_kronecker(K, Poly(ring, {(1, 0, 1): 1.0}))


def test_kronecker_jacobian_check():
    K = KroneckerPart([{(2,): 1.0, (0,): 0.2}], 1)
    assert K.B_at([0.5])[0, 0] == pytest.approx(1.0)
    assert not K.is_constant


def test_kronecker_exact_mode_rejected():
    K = KroneckerPart([0.5], 1)
    with pytest.raises(ValueError):
        apply_R_kronecker(K, Poly.constant(ft_ring(1, 1, exact=True), 1))


def test_apply_R_kronecker_matches_substitution():
    ring = ft_ring(1, 1)
    K = KroneckerPart([1.1], 1)
    M = ExplicitMap(apply_R(K, Coordinates(ring)), 3)
    f = Poly(ring, {(1, 1, 1): 0.5, (-1, 1, 1): 0.5, (2, 0, 2): 1j, (-2, 0, 2): -1j})
    assert substitute(f, M).equals(apply_R(K, f), 1e-14)


# ---------------------------------------------------------------------------
# extraction


@given(seeds)
def test_extract_recovers_known_sequence(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    N = 4
    Y = random_sequence(ring, N, rng)
    phi = lie_transform_apply(Y, Coordinates(ring), N)
    assert extract_generating_sequence(phi, N) == Y


def test_extract_low_orders():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(3)
    phi = random_functions(ring, 1, 3, rng, 0.5)
    for extract in (extract_generating_sequence, extract_lie_series_factorization):
        X = extract(phi, 3)
        assert X[1].as_functions() == phi.part(1)
        # order-2 part of exp(L_{X_1}) x is L_{X_1} X_1 / 2
        L11 = exp_lie(X[1], Coordinates(ring), 2).part(2)
        assert X[2].as_functions() == phi.part(2) - L11


@given(seeds)
def test_lie_series_factorization_round_trip(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    N = 4
    phi = random_functions(ring, 1, N, rng, 0.35)
    X = extract_lie_series_factorization(phi, N)
    assert compose_lie_series_apply(X, Coordinates(ring), N).equals(Coordinates(ring, phi))
    X.check_grading()


def test_extract_grading_error():
    ring = poly_ring(1)
    with pytest.raises(GradingError):
        extract_generating_sequence(Functions(ring, [Poly(ring, {(1,): 0.5})]), 3)


# ---------------------------------------------------------------------------
# factorization


def test_factor_zero_perturbation():
    ring = poly_ring(2)
    spec = MapSpec(LinearPart([0.3, 0.5]), Functions.zero(ring), 4)
    V, W = factor_map(spec)
    assert V.is_zero() and W.is_zero()


def test_factor_quadratic_map():
    lam = Fraction(2, 5)
    a = Fraction(3, 1)
    ring = poly_ring(1, exact=True)
    spec = MapSpec(LinearPart(["2/5"]), Functions(ring, [Poly(ring, {(2,): a})]), 4)
    V, W = factor_map(spec)
    # V comes from x + R^{-1} f: the function R^{-1} maps a z^2 to a z^2 / lambda^2
    assert V[1] == field(ring, {(2,): a / lam**2})
    # R on fields multiplies z^2 e_1 by lambda^2 / lambda
    assert W[1] == field(ring, {(2,): a / lam})


@given(seeds)
def test_factorization_reconstructs_map(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    spec = random_linear_spec(rng, n, 4, exact=True)
    V, W = factor_map(spec)
    target = spec.coordinates().truncate(4)
    assert map_from_left_factor(spec.unperturbed, V, 4).equals(target)
    assert map_from_right_factor(spec.unperturbed, W, 4).equals(target)


def test_factorization_kronecker():
    ring = ft_ring(1, 1, fourier_cutoff=2)
    K = KroneckerPart([0.9], 1)
    f = Functions(ring, [Poly(ring, {(1, 0, 1): 0.5, (-1, 0, 1): 0.5, (0, 1, 2): 0.3}),
                         Poly(ring, {(1, 0, 1): -0.5j, (-1, 0, 1): 0.5j})])
    spec = MapSpec(K, f, 3)
    V, W = factor_map(spec)
    target = spec.coordinates().truncate(3)
    assert map_from_left_factor(K, V, 3).equals(target, 1e-13)
    assert map_from_right_factor(K, W, 3).equals(target, 1e-13)


def test_mapspec_grading_and_dimension_errors():
    ring = poly_ring(1)
    with pytest.raises(GradingError):
        MapSpec(LinearPart([0.5]), Functions(ring, [Poly(ring, {(1,): 1.0})]), 3)
    with pytest.raises(DimensionError):
        MapSpec(LinearPart([0.5, 0.2]), Functions.zero(ring), 3)


def test_mapspec_evaluate():
    ring = poly_ring(1)
    spec = MapSpec(LinearPart([0.4]), Functions(ring, [Poly(ring, {(2,): 1.0})]), 6)
    assert spec.evaluate([0.1])[0] == pytest.approx(0.4 * 0.1 + 0.01)


# ---------------------------------------------------------------------------
# composition formulas


def test_commute_past_zero_and_R():
    ring = poly_ring(1, exact=True)
    Y = GeneratingSequence(ring, {1: field(ring, {(2,): 3})})
    assert commute_past(GeneratingSequence(ring), Y, 4) == Y
    W = commute_past(LinearPart(["2/5"]), Y, 4)
    assert W[1] == field(ring, {(2,): Fraction(6, 5)})


@given(seeds)
def test_commute_past_identity(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    N = 4
    X, Y = random_sequence(ring, N, rng, 0.3), random_sequence(ring, N, rng, 0.3)
    W = commute_past(X, Y, N)
    f = random_poly(ring, 1, rng)
    lhs = lie_transform_apply(X, lie_transform_apply(Y, f, N), N)
    rhs = lie_transform_apply(W, lie_transform_apply(X, f, N), N)
    assert lhs == rhs


def test_commute_past_R_identity():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(4)
    L = LinearPart(["1/3", "5/7"])
    Y = random_sequence(ring, 3, rng)
    W = commute_past(L, Y, 3)
    f = random_poly(ring, 2, rng)
    # R o T_Y = T_W o R on functions: T_Y applied first, then R, as an operator on f
    lhs = apply_R(L, lie_transform_apply(Y, f, 3))
    rhs = lie_transform_apply(W, apply_R(L, f), 3)
    assert lhs.equals(rhs.truncate(3))


def test_compose_with_zero():
    ring = poly_ring(2, exact=True)
    X = random_sequence(ring, 4, np.random.default_rng(5))
    zero = GeneratingSequence(ring)
    assert compose_transforms(X, zero, 4) == X
    assert compose_transforms(zero, X, 4) == X


@given(seeds)
def test_compose_associative_on_coordinates(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    N = 4
    X, Y, U = (random_sequence(ring, N, rng, 0.3) for _ in range(3))
    a = compose_transforms(X, compose_transforms(Y, U, N), N)
    b = compose_transforms(compose_transforms(X, Y, N), U, N)
    x = Coordinates(ring)
    assert lie_transform_apply(a, x, N).equals(lie_transform_apply(b, x, N))
    assert a == b


def test_bch_examples():
    ring = poly_ring(2, exact=True)
    rng = np.random.default_rng(6)
    X = random_field(ring, 1, rng)
    zero = Field.zero(ring)
    assert bch_compose(X, zero, 5) == GeneratingSequence(ring, {1: X})
    # commuting fields: x1^2 e1 and x2^2 e2
    A, B = field(ring, {(2, 0): 1}, {}), field(ring, {}, {(0, 2): 1})
    assert commutator(A, B).is_zero()
    assert bch_compose(A, B, 5) == GeneratingSequence(ring, {1: A + B})


def test_bch_rejects_higher_order():
    ring = poly_ring(1)
    with pytest.raises(GradingError):
        bch_compose(field(ring, {(3,): 1.0}), Field.zero(ring), 4)


@given(seeds)
def test_bch_matches_product_of_lie_series(seed):
    rng = np.random.default_rng(seed)
    ring = poly_ring(2, exact=True)
    X, Y = random_field(ring, 1, rng), random_field(ring, 1, rng)
    f = random_poly(ring, 1, rng)
    N = 5
    W = bch_compose(X, Y, N)
    assert lie_transform_apply(W, f, N) == exp_lie(X, exp_lie(Y, f, N), N)
