"""Brute-force verifiers: series substitution and numeric iteration.

These routines never use Lie operators, so agreement with :mod:`lietx.lie`
is a genuine cross-check.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import Coordinates, DimensionError, Field, Functions, Poly, Ring
from .represent import MapSpec

__all__ = [
    "ExplicitMap",
    "substitute",
    "jacobian",
    "inverse_jacobian",
    "matmul",
    "Trajectory",
    "iterate_numeric",
    "sample_points",
    "conjugacy_residual",
]


class ExplicitMap:
    """A truncated coordinate map ``x -> x + shift(x)``.

    For polynomial rings the shift may hold a linear part (the map then has
    the form ``A x + ...`` with ``A`` invertible).  For Fourier-Taylor rings
    the order-0 part of the shift must be a constant angle translation.
    """

    def __init__(self, image: Coordinates, order: int):
        self.ring = image.ring
        self.image = image.truncate(order)
        self.order = order
        ring = self.ring
        if ring.eps:
            na = ring.n_angles
            for j, c in enumerate(self.image.shift.comps):
                for k, _ in c.terms.items():
                    if k[-1] == 0 and (j >= na or any(k[:-1])):
                        raise ValueError("order-0 part of a torus map must be a constant angle shift")
        else:
            for c in self.image.shift.comps:
                if c.coeff((0,) * ring.nkey):
                    raise ValueError("map must fix the origin (no constant term)")
        self._powers: dict = {}

    @classmethod
    def from_functions(cls, ring: Ring, shift: Functions, order: int) -> "ExplicitMap":
        return cls(Coordinates(ring, shift), order)

    def component(self, j: int) -> Poly:
        """Image component ``y_j`` as a series (polynomial rings, or action components)."""
        ring = self.ring
        return Poly.variable(ring, j) + self.image.shift.comps[j]

    def _power(self, j: int, e: int) -> Poly:
        key = (j, e)
        p = self._powers.get(key)
        if p is None:
            if e == 0:
                p = Poly.constant(self.ring, 1)
            elif e == 1:
                p = self.component(j)
            else:
                p = self._power(j, e - 1).mul(self.component(j), self.order)
            self._powers[key] = p
        return p

    def _angle_factor(self, mode) -> Poly:
        """``exp(i <k, a(x)>)`` where ``a`` is the angle displacement."""
        key = ("angle", tuple(mode))
        p = self._powers.get(key)
        if p is not None:
            return p
        ring = self.ring
        const = ring.domain.zero
        arg = ring.zero()
        for l, k in enumerate(mode):
            if not k:
                continue
            comp = self.image.shift.comps[l]
            zero_key = (0,) * ring.nkey
            const = const + comp.coeff(zero_key) * k
            arg = arg + Poly(ring, {kk: c for kk, c in comp.terms.items() if kk != zero_key}).scale(k)
        arg = arg.scale(ring.domain.i)
        term = Poly.constant(ring, 1)
        total = term
        n = 1
        while True:
            term = term.mul(arg, self.order).scale(Fraction(1, n))
            if term.is_zero():
                break
            total = total + term
            n += 1
        if const:
            phase = complex(const)
            if abs(phase.imag) > 1e-14:
                raise ValueError("angle translation must be real")
            total = total.scale(complex(math.cos(phase.real), math.sin(phase.real)))
        self._powers[key] = total
        return total

    def evaluate(self, point, eps: float = 1.0) -> np.ndarray:
        return self.image.evaluate(point, eps)


def _monomial_image(M: ExplicitMap, key) -> Poly:
    ring = M.ring
    na = ring.n_angles
    out = Poly.constant(ring, 1)
    if na:
        mode = key[:na]
        if any(mode):
            # exp(i k phi) evaluated at phi + a: keep exp(i k phi), multiply by exp(i k a)
            out = Poly.monomial(ring, tuple(mode) + (0,) * (ring.nkey - na)).mul(M._angle_factor(mode), M.order)
    for l in range(na, ring.nvars):
        e = key[l]
        if e:
            out = out.mul(M._power(l, e), M.order)
    if ring.eps and key[-1]:
        eps_key = [0] * ring.nkey
        eps_key[-1] = key[-1]
        out = out.mul(Poly.monomial(ring, eps_key), M.order)
    return out


def _substitute_scalar(f: Poly, M: ExplicitMap, order: int) -> Poly:
    ring = M.ring
    acc = ring.zero()
    for key, c in f.terms.items():
        img = _monomial_image(M, key)
        if not img.is_zero():
            acc = acc + img.scale(c)
    return acc.truncate(order)


def jacobian(M: ExplicitMap) -> list:
    """Jacobian matrix ``Dy`` of the map as nested lists of series."""
    ring = M.ring
    n = ring.nvars
    rows = []
    for j in range(n):
        comp = M.image.shift.comps[j]
        row = []
        for l in range(n):
            d = comp.diff(l)
            if j == l:
                d = d + Poly.constant(ring, 1)
            row.append(d.truncate(M.order))
        rows.append(row)
    return rows


def matmul(A: list, B: list, order: int) -> list:
    n = len(A)
    ring = A[0][0].ring
    out = []
    for i in range(n):
        row = []
        for j in range(len(B[0])):
            acc = ring.zero()
            for k in range(len(B)):
                if A[i][k] and B[k][j]:
                    acc = acc + A[i][k].mul(B[k][j], order)
            row.append(acc)
        out.append(row)
    return out


def _const_inverse(ring: Ring, M: list) -> list:
    """Gauss-Jordan inverse of a constant matrix in the coefficient domain."""
    dom = ring.domain
    n = len(M)
    A = [[M[i][j] for j in range(n)] + [dom.one if i == j else dom.zero for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r][col]))
        if dom.is_zero(A[piv][col]) if not dom.exact else not A[piv][col]:
            raise ValueError("linear part of the map is not invertible")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[n:] for row in A]


def inverse_jacobian(M: ExplicitMap, order: int | None = None) -> list:
    """``J^{-1}`` by Neumann iteration on the non-constant part of ``J``."""
    order = M.order if order is None else order
    ring = M.ring
    n = ring.nvars
    J = jacobian(M)
    zero_key = (0,) * ring.nkey
    J0 = [[J[i][j].coeff(zero_key) for j in range(n)] for i in range(n)]
    J0inv = _const_inverse(ring, J0)
    J0inv_p = [[Poly.constant(ring, c) for c in row] for row in J0inv]
    rest = [[J[i][j] - Poly.constant(ring, J0[i][j]) for j in range(n)] for i in range(n)]
    # J = J0 (1 + J0^{-1} rest);  J^{-1} = sum_k (-J0^{-1} rest)^k J0^{-1}
    step = [[(-p) for p in row] for row in matmul(J0inv_p, rest, order)]
    total = J0inv_p
    term = J0inv_p
    for _ in range(order + 2):
        term = matmul(step, term, order)
        if all(p.is_zero() for row in term for p in row):
            break
        total = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(total, term)]
    return total


def substitute(f, M: ExplicitMap, order: int | None = None):
    """``f(y(x))`` for a scalar or function tuple, ``J^{-1} v(y(x))`` for a field.

    The result is truncated at ``order`` (default: the map's order), which
    may not exceed the map's order.  A field with terms of order ``-1``
    (constants, polynomial case) needs the map one order beyond ``order``.
    """
    order = M.order if order is None else order
    if order > M.order:
        raise ValueError("map is not known to the requested order")
    if f.ring is not M.ring:
        M.ring.check(f.ring)
    if isinstance(f, Poly):
        return _substitute_scalar(f, M, order)
    if isinstance(f, Functions):
        return Functions(M.ring, [_substitute_scalar(c, M, order) for c in f.comps])
    if isinstance(f, Coordinates):
        if M.ring.n_angles:
            raise ValueError("substitute a coordinate map into a torus map via its shift")
        return Functions(M.ring, [_substitute_scalar(c, M, order) for c in f.as_functions().comps])
    if isinstance(f, Field):
        comps = [[_substitute_scalar(c, M, order)] for c in f.comps]
        Jinv = inverse_jacobian(M, order)
        out = matmul(Jinv, comps, order)
        return Field(M.ring, [row[0].truncate(order) for row in out])
    raise TypeError(f"cannot substitute into {type(f).__name__}")


# ---------------------------------------------------------------------------
# numeric iteration


@dataclass
class Trajectory:
    """Iterates ``x_1 .. x_k`` of a map; ``diverged`` marks an overflow stop."""

    points: np.ndarray
    diverged: bool = False

    @property
    def steps(self) -> int:
        return len(self.points)


def iterate_numeric(spec: MapSpec, point, steps: int, bound: float = 1e100) -> Trajectory:
    """Iterate the map in double precision; stops early when an iterate exceeds ``bound``."""
    x = np.asarray(point, dtype=complex if spec.kind == "linear" else float)
    if x.shape != (spec.ring.nvars,):
        raise DimensionError(f"point must have {spec.ring.nvars} coordinates")
    out = []
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            x = spec.evaluate(x)
            if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > bound:
                diverged = True
                break
            out.append(x)
    arr = np.array(out) if out else np.zeros((0, spec.ring.nvars), dtype=x.dtype)
    return Trajectory(arr, diverged)


# ---------------------------------------------------------------------------
# conjugacy residual


def sample_points(spec: MapSpec, radius: float, samples: int = 64, seed: int = 0) -> np.ndarray:
    """Deterministic sample points for residual checks.

    Polynomial maps: points with Euclidean norm ``radius`` in C^n (an
    equally spaced circle when ``n = 1``).  Torus maps: equally spaced
    angles (with a seeded shift per extra angle) at the expansion center of
    the actions, or uniform in the action domain when one is given.
    """
    ring = spec.ring
    rng = np.random.default_rng(seed)
    if not ring.eps:
        n = ring.nvars
        if n == 1:
            t = 2 * np.pi * (np.arange(samples) + 0.5) / samples
            return (radius * np.exp(1j * t))[:, None]
        z = rng.normal(size=(samples, n)) + 1j * rng.normal(size=(samples, n))
        return radius * z / np.linalg.norm(z, axis=1, keepdims=True)
    na, m = ring.n_angles, ring.n_powers
    pts = np.zeros((samples, na + m))
    pts[:, 0] = 2 * np.pi * (np.arange(samples) + 0.5) / samples
    if na > 1:
        pts[:, 1:na] = rng.uniform(0, 2 * np.pi, size=(samples, na - 1))
    if m:
        if spec.action_domain is not None:
            lo = np.array([a for a, _ in spec.action_domain])
            hi = np.array([b for _, b in spec.action_domain])
            pts[:, na:] = rng.uniform(lo, hi, size=(samples, m))
        else:
            pts[:, na:] = np.array(spec.unperturbed.center)
    return pts


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LIETX_THREADS", "1")))
    except ValueError:
        return 1


def conjugacy_residual(spec: MapSpec, result, radius: float, samples: int = 64, seed: int = 0) -> dict:
    """Numeric residual ``h(F(x)) - G(h(x))`` of the truncated conjugacy.

    ``F`` is the input map, ``G`` the normal form ``T_Z o R`` and ``h`` the
    normalizing change of coordinates, all evaluated numerically.  For
    polynomial maps ``radius`` is the norm of the sample points; for torus
    maps it is the value of the perturbation parameter.  Angle differences
    are reduced modulo ``2 pi``.
    """
    from .lie import lie_transform_apply
    from .normalform import transform_coordinates

    h = transform_coordinates(result)
    # G = R o T_Z evaluated as R(T_Z x): the split form x + (R x - x) adds rounding
    tz = lie_transform_apply(result.Z, Coordinates(result.ring), result.order)
    lin = spec.unperturbed
    pts = sample_points(spec, radius, samples, seed)
    torus = spec.ring.eps
    eps = radius if torus else 1.0
    na = spec.ring.n_angles

    def chunk(block):
        if torus:
            Fx = spec.evaluate(block, epsilon=eps)
            lhs = h.evaluate(Fx, eps).real
            rhs = lin.evaluate(tz.evaluate(h.evaluate(block, eps).real, eps).real)
            diff = lhs - rhs
            diff[:, :na] = (diff[:, :na] + np.pi) % (2 * np.pi) - np.pi
        else:
            lhs = h.evaluate(spec.evaluate(block))
            rhs = lin.evaluate(tz.evaluate(h.evaluate(block)))
            diff = lhs - rhs
        return np.linalg.norm(np.atleast_2d(diff), axis=1)

    workers = _threads()
    blocks = np.array_split(pts, workers) if workers > 1 else [pts]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            norms = np.concatenate(list(ex.map(chunk, blocks)))
    else:
        norms = chunk(pts)
    return {
        "radius": float(radius),
        "max_residual": float(np.max(norms)),
        "mean_residual": float(np.mean(norms)),
        "order": int(spec.order),
    }
