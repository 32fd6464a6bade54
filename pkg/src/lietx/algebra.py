"""Truncated series arithmetic for polynomial and Fourier-Taylor vector fields.

A :class:`Ring` fixes the variables: ``n_angles`` Fourier angles (exponent =
Fourier mode, may be negative), ``n_powers`` polynomial variables (C^n
coordinates, or actions), and optionally an epsilon slot carrying the
perturbation order.  Without the epsilon slot the order of a monomial is its
total degree minus one, so a vector field of degree ``s + 1`` has order ``s``
and the coordinate functions have order 0.

Every value is immutable.  Scalar series are :class:`Poly`; vector fields
(transformed through commutators) are :class:`Field`; tuples of scalar
functions (transformed componentwise) are :class:`Functions`; the identity
map plus a displacement is :class:`Coordinates`.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from . import kernel
from .coeffs import EXACT, FLOAT, GaussQ

__all__ = [
    "Ring",
    "TruncationReport",
    "poly_ring",
    "ft_ring",
    "Poly",
    "Field",
    "Functions",
    "Coordinates",
    "add",
    "lie_derivative",
    "commutator",
    "commutator_poly",
    "commutator_ft",
    "evaluate",
    "DimensionError",
]


class DimensionError(ValueError):
    """Operands live in different rings or have mismatched sizes."""


@dataclass
class TruncationReport:
    """Counts Fourier modes dropped by the per-order cutoff."""

    dropped: int = 0
    by_order: dict = dc_field(default_factory=dict)

    def record(self, order: int, count: int) -> None:
        self.dropped += count
        self.by_order[order] = self.by_order.get(order, 0) + count


@dataclass(frozen=True)
class Ring:
    n_angles: int
    n_powers: int
    eps: bool
    domain: object = FLOAT
    fourier_cutoff: int | None = dc_field(default=None, compare=False)
    report: TruncationReport = dc_field(default_factory=TruncationReport, compare=False, repr=False)

    @property
    def nvars(self) -> int:
        return self.n_angles + self.n_powers

    @property
    def nkey(self) -> int:
        return self.n_angles + self.n_powers + (1 if self.eps else 0)

    @property
    def kind(self) -> str:
        return "fourier_taylor" if self.eps else "poly"

    def order(self, key) -> int:
        return key[-1] if self.eps else sum(key) - 1

    def weight(self, key) -> int:
        return key[-1] if self.eps else sum(key)

    def max_weight(self, order: int) -> int:
        return order if self.eps else order + 1

    def mode(self, key) -> tuple:
        return key[: self.n_angles]

    def zero(self) -> "Poly":
        return Poly(self, {})

    def convert(self, c):
        return self.domain.convert(c)

    def with_domain(self, domain) -> "Ring":
        return Ring(self.n_angles, self.n_powers, self.eps, domain, self.fourier_cutoff, TruncationReport())

    def check(self, other: "Ring") -> None:
        if self != other:
            raise DimensionError(f"ring mismatch: {self} vs {other}")


def poly_ring(n: int, exact: bool = False) -> Ring:
    """Ring of polynomials on C^n graded by degree."""
    if n < 1:
        raise ValueError("dimension must be positive")
    return Ring(0, n, False, EXACT if exact else FLOAT)


def ft_ring(n: int, m: int, exact: bool = False, fourier_cutoff: int | None = None) -> Ring:
    """Ring of Fourier-Taylor series on T^n x G (G in R^m) graded by epsilon order."""
    if n < 1 or m < 0:
        raise ValueError("need at least one angle and a non-negative number of actions")
    return Ring(n, m, True, EXACT if exact else FLOAT, fourier_cutoff)


def _prune(ring: Ring, terms: dict) -> dict:
    if ring.domain.exact:
        out = {k: c for k, c in terms.items() if c}
    else:
        out = {k: c for k, c in terms.items() if abs(c) >= 1e-14}
    if ring.fourier_cutoff is not None and ring.n_angles:
        out = _apply_cutoff(ring, out)
    return out


def _apply_cutoff(ring: Ring, terms: dict) -> dict:
    k1 = ring.fourier_cutoff
    na = ring.n_angles
    kept = {}
    dropped: dict[int, int] = {}
    for key, c in terms.items():
        s = key[-1]
        if sum(abs(k) for k in key[:na]) > max(s, 1) * k1:
            dropped[s] = dropped.get(s, 0) + 1
        else:
            kept[key] = c
    for s, count in dropped.items():
        ring.report.record(s, count)
    return kept


class Poly:
    """Sparse scalar series ``{exponent key: coefficient}`` over a :class:`Ring`."""

    __slots__ = ("ring", "terms", "_cache")

    def __init__(self, ring: Ring, terms: dict | None = None, *, prune: bool = True):
        self.ring = ring
        if terms is None:
            terms = {}
        elif prune:
            conv = ring.domain.convert
            terms = _prune(ring, {tuple(k): conv(c) for k, c in terms.items()})
        self.terms = terms
        self._cache = {}

    # construction -------------------------------------------------------
    @classmethod
    def monomial(cls, ring: Ring, key, coeff=1) -> "Poly":
        key = tuple(key)
        if len(key) != ring.nkey:
            raise DimensionError(f"key {key} has length {len(key)}, ring expects {ring.nkey}")
        if not ring.eps and any(k < 0 for k in key):
            raise ValueError("polynomial exponents must be non-negative")
        if ring.eps and (key[-1] < 0 or any(k < 0 for k in key[ring.n_angles : ring.nvars])):
            raise ValueError("action and epsilon exponents must be non-negative")
        return cls(ring, {key: coeff})

    @classmethod
    def constant(cls, ring: Ring, coeff=1) -> "Poly":
        return cls(ring, {(0,) * ring.nkey: coeff})

    @classmethod
    def variable(cls, ring: Ring, index: int) -> "Poly":
        """Coordinate function of polynomial variable ``index`` (0-based among all coordinates)."""
        if not ring.n_angles <= index < ring.nvars:
            raise ValueError("angles are not polynomial variables")
        key = [0] * ring.nkey
        key[index] = 1
        return cls(ring, {tuple(key): 1})

    # inspection ---------------------------------------------------------
    def items(self):
        """Cached ``(keys, coeffs, weights)`` tuples, the kernel input format."""
        it = self._cache.get("items")
        if it is None:
            keys = tuple(self.terms)
            weight = self.ring.weight
            it = (keys, tuple(self.terms.values()), tuple(weight(k) for k in keys))
            self._cache["items"] = it
        return it

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def orders(self) -> set:
        o = self.ring.order
        return {o(k) for k in self.terms}

    def min_order(self) -> int | None:
        return min(self.orders(), default=None)

    def max_order(self) -> int | None:
        return max(self.orders(), default=None)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def coeff(self, key):
        return self.terms.get(tuple(key), self.ring.domain.zero)

    def __repr__(self):
        if not self.terms:
            return "Poly(0)"
        body = " + ".join(f"({c})*{list(k)}" for k, c in list(self.terms.items())[:8])
        more = " + ..." if len(self.terms) > 8 else ""
        return f"Poly({body}{more})"

    # arithmetic ---------------------------------------------------------
    def _same(self, other: "Poly") -> None:
        if not isinstance(other, Poly):
            raise TypeError(f"expected Poly, got {type(other).__name__}")
        if other.ring is not self.ring:
            self.ring.check(other.ring)

    def __add__(self, other: "Poly") -> "Poly":
        self._same(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, c in other.terms.items():
            old = out.get(k)
            out[k] = c if old is None else old + c
        return Poly(self.ring, _prune(self.ring, out), prune=False)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __neg__(self) -> "Poly":
        return Poly(self.ring, {k: -c for k, c in self.terms.items()}, prune=False)

    def scale(self, c) -> "Poly":
        c = self.ring.convert(c)
        if self.ring.domain.is_zero(c):
            return Poly(self.ring, {}, prune=False)
        return Poly(self.ring, _prune(self.ring, {k: v * c for k, v in self.terms.items()}), prune=False)

    def mul(self, other: "Poly", order: int | None = None) -> "Poly":
        """Product truncated at ``order`` (no truncation when ``None``)."""
        self._same(other)
        limit = self.ring.max_weight(order) if order is not None else 1 << 40
        acc = kernel.sum_products(self.ring, [(self, other)], limit)
        return Poly(self.ring, _prune(self.ring, acc), prune=False)

    def __mul__(self, other):
        if isinstance(other, Poly):
            return self.mul(other)
        return self.scale(other)

    __rmul__ = scale

    def pow(self, n: int, order: int | None = None) -> "Poly":
        result = Poly.constant(self.ring)
        base = self
        while n:
            if n & 1:
                result = result.mul(base, order)
            n >>= 1
            if n:
                base = base.mul(base, order)
        return result

    def diff(self, index: int) -> "Poly":
        """Partial derivative with respect to coordinate ``index``."""
        cache = self._cache
        dkey = ("d", index)
        out = cache.get(dkey)
        if out is not None:
            return out
        ring = self.ring
        terms = {}
        if index < ring.n_angles:
            dom = ring.domain
            if dom.exact:
                for k, c in self.terms.items():
                    m = k[index]
                    if m:
                        terms[k] = c * GaussQ(0, m)
            else:
                for k, c in self.terms.items():
                    m = k[index]
                    if m:
                        terms[k] = c * complex(0, m)
        else:
            for k, c in self.terms.items():
                e = k[index]
                if e:
                    nk = list(k)
                    nk[index] = e - 1
                    terms[tuple(nk)] = c * e
        out = Poly(ring, terms, prune=False)
        cache[dkey] = out
        return out

    def part(self, order: int) -> "Poly":
        o = self.ring.order
        return Poly(self.ring, {k: c for k, c in self.terms.items() if o(k) == order}, prune=False)

    def truncate(self, order: int) -> "Poly":
        o = self.ring.order
        if all(o(k) <= order for k in self.terms):
            return self
        return Poly(self.ring, {k: c for k, c in self.terms.items() if o(k) <= order}, prune=False)

    def map_keys(self, fn) -> "Poly":
        out = {}
        for k, c in self.terms.items():
            nk = fn(k)
            old = out.get(nk)
            out[nk] = c if old is None else old + c
        return Poly(self.ring, _prune(self.ring, out), prune=False)

    def map_coeffs(self, fn) -> "Poly":
        """Apply ``fn(key, coeff)`` to every coefficient."""
        return Poly(self.ring, _prune(self.ring, {k: fn(k, c) for k, c in self.terms.items()}), prune=False)

    def reflect(self) -> "Poly":
        """The series at ``-phi`` (Fourier modes negated)."""
        na = self.ring.n_angles
        return Poly(self.ring, {tuple(-x for x in k[:na]) + k[na:]: c for k, c in self.terms.items()}, prune=False)

    def conjugate(self) -> "Poly":
        """Complex conjugate as a function of real angles/actions."""
        na = self.ring.n_angles
        return Poly(
            self.ring,
            {tuple(-x for x in k[:na]) + k[na:]: c.conjugate() for k, c in self.terms.items()},
            prune=False,
        )

    def is_real(self, tol: float = 1e-12) -> bool:
        """True when ``c_{-k} = conj(c_k)`` for every mode (real-valued series)."""
        return self.equals(self.conjugate(), tol)

    def equals(self, other: "Poly", tol: float | None = None) -> bool:
        """Exact equality, or max coefficient difference <= ``tol`` (absolute)."""
        self._same(other)
        if self.ring.domain.exact and tol is None:
            return self.terms == other.terms
        diff = self - other
        return diff.max_abs() <= (tol if tol is not None else 0.0)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    __hash__ = None

    def to_domain(self, domain) -> "Poly":
        ring = self.ring.with_domain(domain)
        return Poly(ring, {k: domain.convert(complex(c) if not domain.exact else c) for k, c in self.terms.items()})

    def evaluate(self, point, eps: float = 1.0):
        """Numeric value at ``point`` (angles first, then powers).

        ``point`` may be an array of shape ``(nvars,)`` or ``(npoints, nvars)``.
        """
        return evaluate(self, point, eps)


def _as_tuple(comps) -> tuple:
    return tuple(comps)


class _Vector:
    """Shared arithmetic for tuples of series over one ring."""

    __slots__ = ("ring", "comps")

    def __init__(self, ring: Ring, comps: Sequence[Poly]):
        comps = _as_tuple(comps)
        if len(comps) != ring.nvars:
            raise DimensionError(f"{type(self).__name__} needs {ring.nvars} components, got {len(comps)}")
        for c in comps:
            if c.ring is not ring:
                ring.check(c.ring)
        self.ring = ring
        self.comps = comps

    @classmethod
    def zero(cls, ring: Ring):
        z = ring.zero()
        return cls(ring, (z,) * ring.nvars)

    @classmethod
    def from_terms(cls, ring: Ring, terms: Iterable):
        """Build from ``(component, key, coeff)`` triples (component 0-based)."""
        comps = [dict() for _ in range(ring.nvars)]
        conv = ring.convert
        for j, key, c in terms:
            key = tuple(key)
            if len(key) != ring.nkey:
                raise DimensionError(f"key {key} has length {len(key)}, ring expects {ring.nkey}")
            old = comps[j].get(key)
            comps[j][key] = conv(c) if old is None else old + conv(c)
        return cls(ring, [Poly(ring, d) for d in comps])

    def _same(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.ring is not self.ring:
            self.ring.check(other.ring)

    def __add__(self, other):
        self._same(other)
        return type(self)(self.ring, [a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        self._same(other)
        return type(self)(self.ring, [a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return type(self)(self.ring, [-a for a in self.comps])

    def scale(self, c):
        c = self.ring.convert(c)
        return type(self)(self.ring, [a.scale(c) for a in self.comps])

    __rmul__ = scale

    def __mul__(self, c):
        return self.scale(c)

    def __bool__(self):
        return any(self.comps)

    def is_zero(self) -> bool:
        return not any(self.comps)

    def __iter__(self):
        return iter(self.comps)

    def __getitem__(self, j) -> Poly:
        return self.comps[j]

    def __len__(self):
        return len(self.comps)

    def part(self, order: int):
        return type(self)(self.ring, [a.part(order) for a in self.comps])

    def truncate(self, order: int):
        return type(self)(self.ring, [a.truncate(order) for a in self.comps])

    def orders(self) -> set:
        out = set()
        for a in self.comps:
            out |= a.orders()
        return out

    def min_order(self):
        return min(self.orders(), default=None)

    def max_order(self):
        return max(self.orders(), default=None)

    def max_abs(self) -> float:
        return max((a.max_abs() for a in self.comps), default=0.0)

    @property
    def angle_block(self) -> tuple:
        return self.comps[: self.ring.n_angles]

    @property
    def action_block(self) -> tuple:
        return self.comps[self.ring.n_angles :]

    def equals(self, other, tol: float | None = None) -> bool:
        self._same(other)
        return all(a.equals(b, tol) for a, b in zip(self.comps, other.comps))

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.ring == other.ring and self.comps == other.comps

    __hash__ = None

    def evaluate(self, point, eps: float = 1.0) -> np.ndarray:
        return np.stack([evaluate(a, point, eps) for a in self.comps], axis=-1)

    def terms(self):
        """Yield ``(component, key, coeff)`` triples."""
        for j, a in enumerate(self.comps):
            for k, c in a.terms.items():
                yield j, k, c

    def __repr__(self):
        return f"{type(self).__name__}({list(self.comps)!r})"


class Field(_Vector):
    """Vector field; Lie derivatives act on it through the commutator."""

    __slots__ = ()

    def as_functions(self) -> "Functions":
        return Functions(self.ring, self.comps)


class Functions(_Vector):
    """Tuple of scalar functions; Lie derivatives act componentwise."""

    __slots__ = ()

    def as_field(self) -> Field:
        return Field(self.ring, self.comps)


class Coordinates:
    """The identity map plus a displacement: ``x + shift(x)``.

    Angles are not polynomials, so coordinate images are kept in this split
    form; ``L_X x = X`` seeds every recursion acting on coordinates.
    """

    __slots__ = ("ring", "shift")

    def __init__(self, ring: Ring, shift: Functions | None = None):
        self.ring = ring
        self.shift = shift if shift is not None else Functions.zero(ring)
        if self.shift.ring is not ring:
            ring.check(self.shift.ring)

    def __add__(self, other):
        if isinstance(other, Functions):
            return Coordinates(self.ring, self.shift + other)
        if isinstance(other, Coordinates):
            raise TypeError("the sum of two coordinate maps has no identity part")
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Coordinates):
            return self.shift - other.shift
        if isinstance(other, Functions):
            return Coordinates(self.ring, self.shift - other)
        return NotImplemented

    def truncate(self, order: int) -> "Coordinates":
        return Coordinates(self.ring, self.shift.truncate(order))

    def part(self, order: int) -> Functions:
        return self.shift.part(order)

    def min_order(self) -> int:
        return 0

    def is_zero(self) -> bool:
        return False

    def equals(self, other, tol=None) -> bool:
        return isinstance(other, Coordinates) and self.shift.equals(other.shift, tol)

    def as_functions(self) -> Functions:
        """Explicit polynomial components (polynomial variables only)."""
        if self.ring.n_angles:
            raise ValueError("angle coordinates are not polynomials")
        return Functions(self.ring, [Poly.variable(self.ring, j) + s for j, s in enumerate(self.shift.comps)])

    def evaluate(self, point, eps: float = 1.0) -> np.ndarray:
        point = np.asarray(point, dtype=complex if not self.ring.n_angles else float)
        return point + self.shift.evaluate(point, eps)

    def __repr__(self):
        return f"Coordinates(x + {self.shift!r})"


def add(a, b):
    """Coefficientwise sum of two series of the same kind."""
    return a + b


def _weight_limit(ring: Ring, order: int | None) -> int:
    return ring.max_weight(order) if order is not None else 1 << 40


def lie_derivative(X: Field, f: Poly, order: int | None = None) -> Poly:
    """``sum_j X_j df/dx_j`` truncated at ``order``."""
    ring = X.ring
    if f.ring is not ring:
        ring.check(f.ring)
    pairs = [(X.comps[l], f.diff(l)) for l in range(ring.nvars)]
    acc = kernel.sum_products(ring, pairs, _weight_limit(ring, order))
    return Poly(ring, _prune(ring, acc), prune=False)


def commutator(X: Field, V: Field, order: int | None = None) -> Field:
    """Commutator ``{X, V}_j = sum_l (X_l dV_j/dx_l - V_l dX_j/dx_l)``."""
    ring = X.ring
    if V.ring is not ring:
        ring.check(V.ring)
    limit = _weight_limit(ring, order)
    n = ring.nvars
    Xc, Vc = X.comps, V.comps
    out = []
    for j in range(n):
        pairs = [(Xc[l], Vc[j].diff(l)) for l in range(n)]
        pairs += [(Vc[l], -Xc[j].diff(l)) for l in range(n)]
        acc = kernel.sum_products(ring, pairs, limit)
        out.append(Poly(ring, _prune(ring, acc), prune=False))
    return Field(ring, out)


def commutator_poly(X: Field, V: Field, order: int | None = None) -> Field:
    if X.ring.eps:
        raise DimensionError("commutator_poly expects polynomial fields")
    return commutator(X, V, order)


def commutator_ft(X: Field, V: Field, order: int | None = None) -> Field:
    """Block commutator of Fourier-Taylor fields (angle block, action block)."""
    if not X.ring.eps:
        raise DimensionError("commutator_ft expects Fourier-Taylor fields")
    return commutator(X, V, order)


def evaluate(f, point, eps: float = 1.0):
    """Numeric value of a series, field, function tuple or coordinate map."""
    if not isinstance(f, Poly):
        return f.evaluate(point, eps)
    ring = f.ring
    pts = np.asarray(point)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != ring.nvars:
        raise DimensionError(f"point has {pts.shape[1]} coordinates, ring has {ring.nvars}")
    out = np.zeros(pts.shape[0], dtype=complex)
    if f.terms:
        keys = np.array(list(f.terms), dtype=np.int64)
        coeffs = np.array([complex(c) for c in f.terms.values()])
        na, nv = ring.n_angles, ring.nvars
        val = np.ones((pts.shape[0], len(keys)), dtype=complex)
        if na:
            phase = pts[:, :na].real @ keys[:, :na].T
            val *= np.exp(1j * phase)
        for l in range(na, nv):
            val *= pts[:, l : l + 1].astype(complex) ** keys[None, :, l]
        if ring.eps:
            val *= np.asarray(eps, dtype=complex) ** keys[None, :, -1]
        out = val @ coeffs
    return out[0] if single else out

