"""Unperturbed maps, extraction of generating sequences and composition formulas.

Operator convention: ``R`` acts on a scalar function by substitution,
``R f = f(R x)``, and on a vector field by the push-back
``R v = (DR)^{-1} v(R x)``.  A map ``x' = R x + f(x)`` is factored as
``R o T_V`` and ``T_W o R`` with ``W_s = R V_s``.
"""
from __future__ import annotations

import cmath
import math
import warnings
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .algebra import Coordinates, DimensionError, Field, Functions, Poly, Ring
from .lie import (
    GeneratingSequence,
    LieOperatorTrace,
    apply_lie,
    exp_lie,
    lie_transform_apply,
)

__all__ = [
    "GradingError",
    "TaylorTruncationWarning",
    "LinearPart",
    "KroneckerPart",
    "MapSpec",
    "apply_R",
    "apply_R_linear",
    "apply_R_kronecker",
    "extract_generating_sequence",
    "extract_lie_series_factorization",
    "factor_map",
    "map_from_left_factor",
    "map_from_right_factor",
    "commute_past",
    "compose_transforms",
    "bch_compose",
]


class GradingError(ValueError):
    """A series carries terms of an order it is not allowed to have."""


class TaylorTruncationWarning(RuntimeWarning):
    """An action-dependent phase or divisor was replaced by a Taylor polynomial."""


# ---------------------------------------------------------------------------
# unperturbed parts


class LinearPart:
    """Diagonal linear map ``z -> diag(lambda) z`` on C^n.

    Parameters
    ----------
    eigenvalues : sequence
        Nonzero eigenvalues.  Entries may be numbers, ``"p/q"`` strings or
        ``(re, im)`` pairs; strings and pairs keep exact rational values for
        exact-mode rings.
    frequencies : sequence of float, optional
        Override for the imaginary parts of ``log(lambda_j)`` (any branch).
    """

    kind = "linear"

    def __init__(self, eigenvalues: Sequence, frequencies: Sequence[float] | None = None):
        if not eigenvalues:
            raise ValueError("need at least one eigenvalue")
        self.eigenvalues = tuple(eigenvalues)
        self.n = len(self.eigenvalues)
        numeric = [_to_complex(l) for l in self.eigenvalues]
        if any(l == 0 for l in numeric):
            raise ValueError("eigenvalues must be nonzero")
        self.numeric = tuple(numeric)
        logs = [cmath.log(l) for l in numeric]
        if frequencies is not None:
            if len(frequencies) != self.n:
                raise DimensionError("one frequency per eigenvalue")
            logs = [complex(a.real, w) for a, w in zip(logs, frequencies)]
        self.logs = tuple(logs)
        self._cache: dict = {}

    def lambdas(self, ring: Ring) -> tuple:
        key = ("lam", ring.domain)
        lam = self._cache.get(key)
        if lam is None:
            lam = self._cache[key] = tuple(ring.convert(l) for l in self.eigenvalues)
        return lam

    def factor(self, ring: Ring, k, j: int | None = None, inverse: bool = False):
        """``lambda^k`` (scalar) or ``lambda^k / lambda_j`` (field component ``j``)."""
        key = (ring.domain, tuple(k), j, inverse)
        f = self._cache.get(key)
        if f is None:
            lam = self.lambdas(ring)
            f = ring.domain.one
            for l, e in zip(lam, k):
                if e:
                    f = f * l**e
            if j is not None:
                f = f / lam[j]
            if inverse:
                f = ring.domain.one / f
            self._cache[key] = f
        return f

    def evaluate(self, point) -> np.ndarray:
        return np.asarray(point, dtype=complex) * np.array(self.numeric)

    def __repr__(self):
        return f"LinearPart({list(self.eigenvalues)!r})"


class KroneckerPart:
    """Angle shift ``phi -> phi + omega(I), I -> I`` on T^n x G.

    Parameters
    ----------
    omega : sequence
        ``n`` frequency components.  Each is a number (constant frequency)
        or a mapping ``{action exponents: coefficient}`` for a polynomial in
        the ``m`` actions.
    m : int
        Number of actions.
    degree_cap : int
        Number of Taylor terms kept when an action-dependent phase
        ``exp(i <k, omega(I)>)`` or divisor is expanded around ``center``.
    center : sequence of float, optional
        Expansion point in the action domain (default: origin).
    """

    kind = "kronecker"

    def __init__(self, omega: Sequence, m: int, degree_cap: int = 6, center: Sequence[float] | None = None,
                 check_seed: int = 0):
        self.n = len(omega)
        self.m = int(m)
        if self.n < 1 or self.m < 0:
            raise ValueError("need at least one angle")
        polys = []
        for w in omega:
            if isinstance(w, Mapping):
                d = {}
                for k, c in w.items():
                    k = tuple(int(e) for e in k)
                    if len(k) != self.m or any(e < 0 for e in k):
                        raise DimensionError(f"frequency exponent {k} does not fit {self.m} actions")
                    d[k] = float(c)
                polys.append({k: c for k, c in d.items() if c != 0.0})
            else:
                polys.append({(0,) * self.m: float(w)} if float(w) != 0.0 else {})
        self.omega = tuple(polys)
        self.degree_cap = int(degree_cap)
        self.center = tuple(float(c) for c in center) if center is not None else (0.0,) * self.m
        if len(self.center) != self.m:
            raise DimensionError("center must have one entry per action")
        self.B = tuple(tuple(_poly_dict_diff(p, l) for l in range(self.m)) for p in self.omega)
        self.is_constant = all(not any(d for d in row) for row in self.B)
        self.omega0 = tuple(_poly_dict_eval(p, self.center) for p in self.omega)
        self._check_jacobian(check_seed)
        self._cache: dict = {}

    def _check_jacobian(self, seed: int) -> None:
        if self.is_constant or not self.m:
            return
        rng = np.random.default_rng(seed)
        h = 1e-6
        for _ in range(3):
            I = rng.uniform(-1.0, 1.0, self.m) + np.array(self.center)
            B = self.B_at(I)
            for l in range(self.m):
                e = np.zeros(self.m)
                e[l] = h
                fd = (self.omega_at(I + e) - self.omega_at(I - e)) / (2 * h)
                if not np.allclose(fd, B[:, l], rtol=1e-5, atol=1e-6):
                    raise ValueError("frequency Jacobian disagrees with finite differences")

    def omega_at(self, I) -> np.ndarray:
        return np.array([_poly_dict_eval(p, I) for p in self.omega], dtype=float)

    def B_at(self, I) -> np.ndarray:
        return np.array([[_poly_dict_eval(d, I) for d in row] for row in self.B], dtype=float).reshape(self.n, self.m)

    def check_ring(self, ring: Ring) -> None:
        if not ring.eps or ring.n_angles != self.n or ring.n_powers != self.m:
            raise DimensionError(f"Kronecker part ({self.n}, {self.m}) does not match {ring}")
        if ring.domain.exact:
            raise ValueError("Kronecker phases are irrational; use float mode")

    def omega_polys(self, ring: Ring) -> tuple:
        """Frequency components as series of epsilon order 0."""
        key = ("omega", ring)
        out = self._cache.get(key)
        if out is None:
            out = tuple(_lift(ring, p) for p in self.omega)
            self._cache[key] = out
        return out

    def B_polys(self, ring: Ring) -> tuple:
        key = ("B", ring)
        out = self._cache.get(key)
        if out is None:
            out = tuple(tuple(_lift(ring, d) for d in row) for row in self.B)
            self._cache[key] = out
        return out

    def phase(self, ring: Ring, mode, inverse: bool = False):
        """``exp(+-i <k, omega(I)>)`` as a number (constant case) or a Taylor polynomial in I."""
        key = ("phase", ring, tuple(mode), inverse)
        out = self._cache.get(key)
        if out is not None:
            return out
        sign = -1.0 if inverse else 1.0
        theta0 = sign * sum(k * w for k, w in zip(mode, self.omega0))
        base = cmath.exp(1j * theta0)
        if self.is_constant:
            out = base
        else:
            delta = self._delta(ring, mode, sign)
            out = _exp_series(ring, delta, self.degree_cap).scale(base)
            warnings.warn(
                f"phase of mode {tuple(mode)} expanded to {self.degree_cap} Taylor terms",
                TaylorTruncationWarning,
                stacklevel=3,
            )
        self._cache[key] = out
        return out

    def _delta(self, ring: Ring, mode, sign: float) -> Poly:
        """``i * sign * <k, omega(I) - omega(center)>`` as a series."""
        acc = ring.zero()
        for k, w, w0 in zip(mode, self.omega_polys(ring), self.omega0):
            if k:
                acc = acc + (w - Poly.constant(ring, w0)).scale(k)
        return acc.scale(1j * sign)

    def divisor(self, mode) -> complex:
        """``exp(i <k, omega(center)>) - 1``."""
        return cmath.exp(1j * sum(k * w for k, w in zip(mode, self.omega0))) - 1

    def evaluate(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        pts = np.atleast_2d(point).copy()
        for row in pts:
            row[: self.n] += self.omega_at(row[self.n :])
        return pts[0] if point.ndim == 1 else pts

    def __repr__(self):
        return f"KroneckerPart(n={self.n}, m={self.m}, constant={self.is_constant})"


def _to_complex(x) -> complex:
    if isinstance(x, str):
        return complex(Fraction(x.strip()))
    if isinstance(x, tuple):
        return complex(_to_complex(x[0]).real, _to_complex(x[1]).real)
    return complex(x)


def _poly_dict_diff(p: dict, l: int) -> dict:
    out = {}
    for k, c in p.items():
        if k[l]:
            kk = list(k)
            kk[l] -= 1
            out[tuple(kk)] = c * k[l]
    return out


def _poly_dict_eval(p: dict, I) -> float:
    return float(sum(c * math.prod(float(x) ** e for x, e in zip(I, k)) for k, c in p.items()))


def _lift(ring: Ring, p: dict) -> Poly:
    pad = (0,) * ring.n_angles
    return Poly(ring, {pad + k + (0,): c for k, c in p.items()})


def _exp_series(ring: Ring, delta: Poly, terms: int) -> Poly:
    result = Poly.constant(ring, 1)
    power = Poly.constant(ring, 1)
    for n in range(1, terms + 1):
        power = power.mul(delta).scale(Fraction(1, n))
        if power.is_zero():
            break
        result = result + power
    return result


def _recip_series(ring: Ring, d0: complex, delta: Poly, terms: int) -> Poly:
    """Taylor polynomial of ``1 / (d0 + delta)`` around ``delta = 0``."""
    inv = 1 / d0
    result = Poly.constant(ring, inv)
    power = Poly.constant(ring, inv)
    for _ in range(terms):
        power = power.mul(delta).scale(-inv)
        if power.is_zero():
            break
        result = result + power
    return result


# ---------------------------------------------------------------------------
# the operator R


def apply_R_linear(L: LinearPart, target, inverse: bool = False):
    """``R f = f(Lambda z)`` on functions, ``R v = Lambda^{-1} v(Lambda z)`` on fields."""
    ring = target.ring
    if ring.eps or ring.nvars != L.n:
        raise DimensionError(f"linear part of size {L.n} does not match {ring}")
    if isinstance(target, Poly):
        return _scale_poly_linear(L, target, None, inverse)
    if isinstance(target, Field):
        return Field(ring, [_scale_poly_linear(L, c, j, inverse) for j, c in enumerate(target.comps)])
    if isinstance(target, Functions):
        return Functions(ring, [_scale_poly_linear(L, c, None, inverse) for c in target.comps])
    if isinstance(target, Coordinates):
        lam = L.lambdas(ring)
        one = ring.domain.one
        lin = []
        for j in range(ring.nvars):
            f = (one / lam[j] if inverse else lam[j]) - one
            lin.append(Poly.variable(ring, j).scale(f))
        return Coordinates(ring, Functions(ring, lin) + apply_R_linear(L, target.shift, inverse))
    raise TypeError(f"unsupported target {type(target).__name__}")


def _scale_poly_linear(L: LinearPart, p: Poly, j, inverse: bool) -> Poly:
    ring = p.ring
    return Poly(ring, {k: c * L.factor(ring, k, j, inverse) for k, c in p.terms.items()})


def apply_R_kronecker(K: KroneckerPart, target, inverse: bool = False):
    """Angle shift by ``+-omega(I)``; fields also get the ``-+B`` angle correction.

    For action-dependent frequencies the phases are Taylor polynomials around
    the expansion center and a :class:`TaylorTruncationWarning` is issued.
    """
    ring = target.ring
    K.check_ring(ring)
    if isinstance(target, Poly):
        return _shift_poly(K, target, inverse)
    if isinstance(target, Functions):
        return Functions(ring, [_shift_poly(K, c, inverse) for c in target.comps])
    if isinstance(target, Field):
        shifted = [_shift_poly(K, c, inverse) for c in target.comps]
        n = ring.n_angles
        if not K.is_constant:
            Bp = K.B_polys(ring)
            for j in range(n):
                corr = ring.zero()
                for l in range(K.m):
                    if Bp[j][l]:
                        corr = corr + Bp[j][l].mul(shifted[n + l])
                shifted[j] = shifted[j] + corr if inverse else shifted[j] - corr
        return Field(ring, shifted)
    if isinstance(target, Coordinates):
        sign = -1 if inverse else 1
        lin = [w.scale(sign) for w in K.omega_polys(ring)] + [ring.zero()] * K.m
        return Coordinates(ring, Functions(ring, lin) + apply_R_kronecker(K, target.shift, inverse))
    raise TypeError(f"unsupported target {type(target).__name__}")


def _shift_poly(K: KroneckerPart, p: Poly, inverse: bool) -> Poly:
    ring = p.ring
    n = ring.n_angles
    if K.is_constant:
        return Poly(ring, {k: c * K.phase(ring, k[:n], inverse) for k, c in p.terms.items()})
    by_mode: dict = {}
    for k, c in p.terms.items():
        by_mode.setdefault(k[:n], {})[k] = c
    acc = ring.zero()
    for mode, terms in by_mode.items():
        piece = Poly(ring, terms)
        if any(mode):
            piece = piece.mul(K.phase(ring, mode, inverse))
        acc = acc + piece
    return acc


def apply_R(part, target, inverse: bool = False):
    """Dispatch to :func:`apply_R_linear` or :func:`apply_R_kronecker`."""
    if isinstance(part, LinearPart):
        return apply_R_linear(part, target, inverse)
    if isinstance(part, KroneckerPart):
        return apply_R_kronecker(part, target, inverse)
    raise TypeError(f"unknown unperturbed part {type(part).__name__}")


# ---------------------------------------------------------------------------
# map specifications


class MapSpec:
    """A map ``x' = R x + f_1(x) + ... + f_N(x)``.

    Parameters
    ----------
    unperturbed : LinearPart or KroneckerPart
    perturbation : Functions
        Corrections ``f`` in the matching ring: polynomial components of
        degree ``>= 2`` for a linear part, or Fourier-Taylor components with
        epsilon order ``>= 1`` for a Kronecker part (angle block ``f``,
        action block ``g``).
    order : int
        Truncation order ``N``; higher-order terms of ``perturbation`` are dropped.
    epsilon : float
        Numeric value of the perturbation parameter used by evaluation.
    action_domain : sequence of (low, high), optional
        Box of admissible actions (Kronecker case), used for divisor checks.
    """

    def __init__(self, unperturbed, perturbation: Functions, order: int, epsilon: float = 1.0,
                 action_domain=None, name: str | None = None):
        if order < 1:
            raise ValueError("order must be at least 1")
        ring = perturbation.ring
        if isinstance(unperturbed, LinearPart):
            if ring.eps or ring.nvars != unperturbed.n:
                raise DimensionError("linear part and perturbation disagree on dimension")
        elif isinstance(unperturbed, KroneckerPart):
            unperturbed.check_ring(ring)
        else:
            raise TypeError("unperturbed part must be LinearPart or KroneckerPart")
        if not isinstance(perturbation, Functions):
            raise TypeError("perturbation must be a Functions tuple")
        low = perturbation.min_order()
        if low is not None and low < 1:
            raise GradingError(f"perturbation has a term of order {low}; the unperturbed part must carry orders <= 0")
        self.unperturbed = unperturbed
        self.ring = ring
        self.order = int(order)
        self.perturbation = perturbation.truncate(self.order)
        self.epsilon = float(epsilon)
        self.action_domain = action_domain
        self.name = name

    @property
    def kind(self) -> str:
        return self.unperturbed.kind

    def coordinates(self) -> Coordinates:
        """The map as a coordinate image ``R x + f``."""
        return apply_R(self.unperturbed, Coordinates(self.ring)) + self.perturbation

    def evaluate(self, point, epsilon: float | None = None) -> np.ndarray:
        """Numeric image of ``point`` (shape ``(nvars,)`` or ``(npoints, nvars)``)."""
        eps = self.epsilon if epsilon is None else epsilon
        delta = self.perturbation.evaluate(point, eps)
        if self.kind == "kronecker":
            return self.unperturbed.evaluate(point) + delta.real
        return self.unperturbed.evaluate(point) + delta

    def with_order(self, order: int) -> "MapSpec":
        return MapSpec(self.unperturbed, self.perturbation, order, self.epsilon, self.action_domain, self.name)

    def __repr__(self):
        return f"MapSpec({self.unperturbed!r}, order={self.order})"


# ---------------------------------------------------------------------------
# extraction of generating sequences


def _check_corrections(phi: Functions) -> None:
    low = phi.min_order()
    if low is not None and low < 1:
        raise GradingError(f"near-identity corrections must have order >= 1, found order {low}")


def extract_generating_sequence(phi: Functions | Coordinates, order: int) -> GeneratingSequence:
    """Generating sequence ``X`` with ``T_X x = x + phi`` to ``order``.

    ``X_1 = phi_1`` and ``X_r = phi_r - sum_{k<r} (k/r) L_{X_k} E_{r-k} x``.
    """
    if isinstance(phi, Coordinates):
        phi = phi.shift
    _check_corrections(phi)
    ring = phi.ring
    X = GeneratingSequence(ring)
    trace = LieOperatorTrace(X, Coordinates(ring), order)
    for r in range(1, order + 1):
        acc = phi.part(r)
        for k in range(1, r):
            Xk = X.get(k)
            if Xk is None:
                continue
            prev = trace[r - k]
            if prev.is_zero():
                continue
            acc = acc - apply_lie(Xk, prev, order).part(r).scale(Fraction(k, r))
        X._put(r, acc.as_field())
    return X


def extract_lie_series_factorization(phi: Functions | Coordinates, order: int) -> GeneratingSequence:
    """Generating sequence ``X`` with ``exp(L_{X_N}) ... exp(L_{X_1}) x = x + phi`` to ``order``.

    Built step by step: ``X_r`` is the order-``r`` part of ``phi`` minus the
    displacement already produced by the first ``r - 1`` factors.
    """
    if isinstance(phi, Coordinates):
        phi = phi.shift
    _check_corrections(phi)
    ring = phi.ring
    X = GeneratingSequence(ring)
    current = Coordinates(ring)
    for r in range(1, order + 1):
        Xr = (phi.part(r) - current.part(r)).as_field()
        if Xr.is_zero():
            continue
        X._put(r, Xr)
        current = exp_lie(Xr, current, order, order_tag=r)
    return X


def factor_map(spec: MapSpec) -> tuple[GeneratingSequence, GeneratingSequence]:
    """Factor ``x' = R x + f`` as ``R o T_V`` and as ``T_W o R``.

    ``V`` is extracted from ``x + R^{-1} f`` (``R^{-1}`` acting on functions)
    and ``W_s = R V_s`` (``R`` acting on fields).
    """
    U = spec.unperturbed
    pulled = apply_R(U, spec.perturbation, inverse=True)
    V = extract_generating_sequence(pulled.truncate(spec.order), spec.order)
    W = GeneratingSequence(spec.ring, {s: apply_R(U, Vs) for s, Vs in V.items()})
    return V, W


def map_from_left_factor(part, V: GeneratingSequence, order: int) -> Coordinates:
    """Coordinate image of ``R o T_V``: the series ``(T_V x)`` transformed by ``R``."""
    return apply_R(part, lie_transform_apply(V, Coordinates(V.ring), order)).truncate(order)


def map_from_right_factor(part, W: GeneratingSequence, order: int) -> Coordinates:
    """Coordinate image of ``T_W o R``: ``T_W`` applied to the series ``R x``."""
    return lie_transform_apply(W, apply_R(part, Coordinates(W.ring)), order)


# ---------------------------------------------------------------------------
# composition formulas


def commute_past(X, Y: GeneratingSequence, order: int) -> GeneratingSequence:
    """Sequence ``W`` with ``T_X o T_Y = T_W o T_X``.

    ``X`` may be a generating sequence (then ``W_j = T_X Y_j``, which may carry
    terms of order above ``j``) or an unperturbed part (then ``W_j = R Y_j``).
    """
    if isinstance(X, (LinearPart, KroneckerPart)):
        return GeneratingSequence(Y.ring, {j: apply_R(X, Yj) for j, Yj in Y.items()})
    if not isinstance(X, GeneratingSequence):
        raise TypeError("X must be a generating sequence or an unperturbed part")
    if X.ring != Y.ring:
        raise DimensionError("sequences live in different rings")
    return GeneratingSequence(Y.ring, {j: lie_transform_apply(X, Yj, order) for j, Yj in Y.items() if j <= order})


def compose_transforms(X: GeneratingSequence, Y: GeneratingSequence, order: int) -> GeneratingSequence:
    """Sequence ``Z`` with ``T_Z = T_X o T_Y``.

    ``Z_s = X_s + Y_s + sum_{j=1}^{s-1} (j/s) E^X_{s-j} Y_j``.
    """
    if X.ring != Y.ring:
        raise DimensionError("sequences live in different rings")
    ring = X.ring
    traces = {j: LieOperatorTrace(X, Yj, order) for j, Yj in Y.items() if j < order}
    Z = {}
    for s in range(1, order + 1):
        acc = X[s] + Y[s]
        for j, tr in traces.items():
            if j >= s:
                continue
            img = tr[s - j]
            if not img.is_zero():
                acc = acc + img.scale(Fraction(j, s))
        Z[s] = acc.truncate(order)
    return GeneratingSequence(ring, Z)


def bch_compose(X: Field, Y: Field, order: int) -> GeneratingSequence:
    """Sequence ``W`` with ``T_W = exp(L_X) o exp(L_Y)`` for order-1 fields.

    ``W_1 = X + Y`` and ``W_s = L_X^{s-1} Y / s!``.
    """
    for F in (X, Y):
        if not F.is_zero() and F.orders() != {1}:
            raise GradingError("bch_compose expects order-1 fields")
    ring = X.ring
    W = {1: X + Y}
    term = Y
    for s in range(2, order + 1):
        term = apply_lie(X, term, order)
        if term.is_zero():
            break
        W[s] = term.scale(Fraction(1, math.factorial(s)))
    return GeneratingSequence(ring, W)
