"""Homological equations and the two normalization drivers.

A map ``T_W o R`` is conjugated to its normal form ``T_Z o R`` by a
normalizing operator built from ``X``: either the Lie transform ``T_X``
(driver ``"transform"``) or the product ``exp(L_{X_1}) o ... o exp(L_{X_N})``
(driver ``"series"``).  The conjugacy identity checked by the tests is

    U(T_Z(R x)) = T_W(R(U x))

on coordinates, where ``U`` is the normalizing operator.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable

import numpy as np

from .algebra import Coordinates, Field, Functions, Poly, Ring
from .lie import (
    GeneratingSequence,
    LieOperatorTrace,
    apply_lie,
    compose_lie_series_apply,
    lie_transform_apply,
    lie_transform_inverse_apply,
)
from .represent import (
    KroneckerPart,
    LinearPart,
    MapSpec,
    TaylorTruncationWarning,
    _exp_series,
    _recip_series,
    apply_R,
    factor_map,
)

__all__ = [
    "ResonanceError",
    "SymmetryError",
    "NearResonanceWarning",
    "Diagnostics",
    "SplitResult",
    "HomologicalOperator",
    "NormalFormResult",
    "solve_homological_linear",
    "solve_homological_kronecker",
    "normalize",
    "normalize_lie_transform",
    "normalize_lie_series",
    "SymmetryType",
    "classify_symmetry",
    "is_type",
    "normalize_reversible",
    "transform_coordinates",
    "inverse_transform_coordinates",
    "conjugacy_defect",
]

RESONANCE_TOL = 1e-10
DIVISOR_FLOOR = 1e-6


class ResonanceError(ArithmeticError):
    """A divisor vanishes (or falls below the floor) where it cannot be tolerated."""

    def __init__(self, message: str, mode=None, order: int | None = None):
        super().__init__(message)
        self.mode = mode
        self.order = order


class SymmetryError(ValueError):
    """A series breaks the reversibility type it is required to have."""

    def __init__(self, message: str, order: int | None = None, block: str | None = None):
        super().__init__(message)
        self.order = order
        self.block = block


class NearResonanceWarning(RuntimeWarning):
    """A divisor is nonzero but below the divisor floor."""


@dataclass
class Diagnostics:
    """Divisor statistics collected while solving homological equations."""

    min_divisor: float | None = None
    resonant_modes: list = dc_field(default_factory=list)
    warnings: list = dc_field(default_factory=list)
    truncated_modes: int = 0

    def see_divisor(self, value: float) -> None:
        value = float(value)
        if self.min_divisor is None or value < self.min_divisor:
            self.min_divisor = value

    def to_dict(self) -> dict:
        return {
            "min_divisor": self.min_divisor,
            "resonant_modes": self.resonant_modes,
            "warnings": self.warnings,
            "truncated_modes": self.truncated_modes,
        }


@dataclass
class SplitResult:
    """``psi = kernel + range`` with kernel terms of zero divisor."""

    kernel: Field
    range: Field


class HomologicalOperator:
    """``D = R - 1`` for a linear or Kronecker unperturbed part.

    Parameters
    ----------
    part : LinearPart or KroneckerPart
    ring : Ring
    tol_resonance : float
        Float-mode threshold below which a divisor counts as zero.
    divisor_floor : float
        Divisors below this (but not resonant) trigger a near-resonance
        warning; for action-dependent frequencies they abort the solve.
    action_domain : sequence of (low, high), optional
        Action box sampled when frequencies depend on the actions.
    """

    def __init__(self, part, ring: Ring, tol_resonance: float = RESONANCE_TOL,
                 divisor_floor: float = DIVISOR_FLOOR, action_domain=None):
        if tol_resonance <= 0 or divisor_floor <= 0:
            raise ValueError("tolerances must be positive")
        self.part = part
        self.ring = ring
        self.tol_resonance = tol_resonance
        self.divisor_floor = divisor_floor
        self.action_domain = action_domain
        if isinstance(part, KroneckerPart):
            part.check_ring(ring)
        elif isinstance(part, LinearPart):
            if ring.eps or ring.nvars != part.n:
                raise ValueError("linear part does not match the ring")
        else:
            raise TypeError("unknown unperturbed part")

    @property
    def kind(self) -> str:
        return self.part.kind

    def divisor(self, key, j: int | None = None):
        """Eigenvalue of ``D`` on monomial ``x^k e_j``, or on Fourier mode ``k`` (at the center)."""
        if self.kind == "linear":
            return self.part.factor(self.ring, key, j) - self.ring.domain.one
        return self.part.divisor(key[: self.ring.n_angles])

    def is_resonant(self, d) -> bool:
        if self.ring.domain.exact:
            return not d
        return abs(d) < self.tol_resonance

    def apply(self, X: Field) -> Field:
        return apply_R(self.part, X) - X

    def split(self, psi: Field) -> SplitResult:
        kern, rng = [], []
        na = self.ring.n_angles
        for j, comp in enumerate(psi.comps):
            kt, rt = {}, {}
            for k, c in comp.terms.items():
                if self.kind == "kronecker":
                    res = not any(k[:na]) or (self.part.is_constant and self.is_resonant(self.divisor(k)))
                else:
                    res = self.is_resonant(self.divisor(k, j))
                (kt if res else rt)[k] = c
            kern.append(Poly(self.ring, kt, prune=False))
            rng.append(Poly(self.ring, rt, prune=False))
        return SplitResult(Field(self.ring, kern), Field(self.ring, rng))

    def solve(self, psi: Field, order: int | None = None, diagnostics: Diagnostics | None = None):
        if self.kind == "linear":
            return solve_homological_linear(self, psi, order, diagnostics)
        return solve_homological_kronecker(self, psi, order, diagnostics)


def _near(H: HomologicalOperator, diag: Diagnostics, where: str, value: float) -> None:
    msg = f"small divisor {value:.3e} at {where}"
    diag.warnings.append(msg)
    warnings.warn(msg, NearResonanceWarning, stacklevel=4)


def solve_homological_linear(H: HomologicalOperator, psi: Field, order: int | None = None,
                             diagnostics: Diagnostics | None = None):
    """Solve ``D X + Z = psi`` monomialwise with ``Z`` in the kernel and ``X`` in the range.

    Returns
    -------
    (Field, Field)
        ``X`` with coefficients ``psi / d(k, j)`` on nonresonant monomials and
        ``Z`` holding the resonant monomials unchanged.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    ring = psi.ring
    exact = ring.domain.exact
    Xc, Zc = [], []
    for j, comp in enumerate(psi.comps):
        xt, zt = {}, {}
        for k, c in comp.terms.items():
            d = H.divisor(k, j)
            mag = 0.0 if (exact and not d) else abs(d)
            diag.see_divisor(mag)
            if H.is_resonant(d):
                zt[k] = c
                diag.resonant_modes.append({"order": order, "component": j + 1, "exponents": list(k)})
                continue
            if mag < H.divisor_floor:
                _near(H, diag, f"order {order}, component {j + 1}, exponents {list(k)}", mag)
            xt[k] = c / d
        Xc.append(Poly(ring, xt))
        Zc.append(Poly(ring, zt, prune=False))
    return Field(ring, Xc), Field(ring, Zc)


def _by_mode(p: Poly, na: int) -> dict:
    out: dict = {}
    for k, c in p.terms.items():
        out.setdefault(k[:na], {})[k] = c
    return out


def solve_homological_kronecker(H: HomologicalOperator, psi: Field, order: int | None = None,
                                diagnostics: Diagnostics | None = None):
    """Solve ``D X + Z = psi`` modewise on Fourier-Taylor fields.

    Mode ``k = 0`` goes to ``Z``.  Other modes give the action block
    ``beta_k / d_k`` and the angle block ``alpha_k / d_k + e_k B beta_k / d_k^2``
    with ``e_k = exp(i <k, omega>)`` and ``d_k = e_k - 1``.  With constant
    frequencies ``B = 0``; a resonant mode (``d_k = 0``) is kept in ``Z``.
    With action-dependent frequencies every divisor is checked on samples of
    the action domain and a divisor below the floor raises :class:`ResonanceError`;
    otherwise ``1/d_k`` and ``e_k`` are Taylor polynomials around the center.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    K: KroneckerPart = H.part
    ring = psi.ring
    na, m = K.n, K.m
    modes: set = set()
    blocks = [_by_mode(c, na) for c in psi.comps]
    for b in blocks:
        modes |= set(b)
    X = [dict() for _ in range(na + m)]
    Z = [dict() for _ in range(na + m)]
    for mode in sorted(modes):
        pieces = [b.get(mode, {}) for b in blocks]
        if not any(mode):
            for j, t in enumerate(pieces):
                Z[j].update(t)
            continue
        if K.is_constant:
            d = K.divisor(mode)
            mag = abs(d)
            diag.see_divisor(mag)
            if H.is_resonant(d):
                for j, t in enumerate(pieces):
                    Z[j].update(t)
                diag.resonant_modes.append({"order": order, "mode": list(mode)})
                continue
            if mag < H.divisor_floor:
                _near(H, diag, f"order {order}, mode {list(mode)}", mag)
            inv = 1 / d
            for j, t in enumerate(pieces):
                for k, c in t.items():
                    X[j][k] = c * inv
            continue
        low = _sampled_min_divisor(K, mode, H.action_domain)
        diag.see_divisor(low)
        if low < H.divisor_floor:
            diag.resonant_modes.append({"order": order, "mode": list(mode)})
            raise ResonanceError(
                f"divisor of mode {list(mode)} drops to {low:.3e} on the action domain", mode=tuple(mode), order=order
            )
        cap = K.degree_cap
        delta = K._delta(ring, mode, 1.0)
        base = complex(np.exp(1j * sum(k * w for k, w in zip(mode, K.omega0))))
        e = _exp_series(ring, delta, cap).scale(base)
        recip = _recip_series(ring, base - 1, e - Poly.constant(ring, base), cap)
        warnings.warn(f"divisor of mode {list(mode)} expanded to {cap} Taylor terms", TaylorTruncationWarning,
                      stacklevel=3)
        diag.warnings.append(f"Taylor-expanded divisor for mode {list(mode)} at order {order}")
        beta = [Poly(ring, pieces[na + l]) for l in range(m)]
        ybl = [b.mul(recip) for b in beta]
        Bp = K.B_polys(ring)
        for l in range(m):
            X[na + l].update(ybl[l].terms)
        recip2 = recip.mul(recip)
        for j in range(na):
            acc = Poly(ring, pieces[j]).mul(recip)
            cross = ring.zero()
            for l in range(m):
                if Bp[j][l]:
                    cross = cross + Bp[j][l].mul(beta[l])
            if cross:
                acc = acc + cross.mul(e).mul(recip2)
            for k, c in acc.terms.items():
                X[j][k] = X[j].get(k, 0) + c
    return (Field(ring, [Poly(ring, t) for t in X]), Field(ring, [Poly(ring, t) for t in Z]))


def _sampled_min_divisor(K: KroneckerPart, mode, domain, points: int = 17) -> float:
    """Smallest ``|exp(i <k, omega(I)>) - 1|`` over a grid on the action box.

    The phase is continuous in ``I``, so a multiple of ``2 pi`` lying between
    two neighbouring grid values means the divisor vanishes in between; that
    case returns 0.
    """
    if domain is None:
        domain = [(c - 1.0, c + 1.0) for c in K.center]
    axes = [np.linspace(lo, hi, points) for lo, hi in domain]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    theta = np.array([float(np.dot(mode, K.omega_at(I))) for I in grid]).reshape((points,) * len(axes))
    low = float(np.min(np.abs(np.exp(1j * theta) - 1)))
    turns = np.floor(theta / (2 * math.pi))
    for ax in range(theta.ndim):
        if np.any(np.diff(turns, axis=ax) != 0):
            return 0.0
    return low


# ---------------------------------------------------------------------------
# results


class NormalFormResult:
    """Output of a normalization driver.

    Attributes
    ----------
    X : GeneratingSequence
        Normalizing sequence.
    Z : GeneratingSequence
        Normal-form sequence; the normal form map is ``T_Z o R``.
    W : GeneratingSequence
        Factorization ``T_W o R`` of the input map.
    psi : dict
        Right-hand side solved at each order.
    driver : str
        ``"transform"`` or ``"series"``.
    """

    def __init__(self, spec: MapSpec, X, Z, W, psi, diagnostics: Diagnostics, driver: str, V=None):
        self.spec = spec
        self.X = X
        self.Z = Z
        self.W = W
        self.V = V
        self.psi = psi
        self.diagnostics = diagnostics
        self.driver = driver
        self.symmetry_violations: list = []

    @property
    def order(self) -> int:
        return self.spec.order

    @property
    def ring(self) -> Ring:
        return self.spec.ring

    def normalizing_apply(self, target):
        """Apply the normalizing operator ``U`` to a target."""
        N = self.order
        if self.driver == "transform":
            return lie_transform_apply(self.X, target, N)
        return compose_lie_series_apply(self.X, target, N, reverse=True)

    def normal_form_map(self) -> Coordinates:
        """Coordinate image of the normal form ``T_Z o R``."""
        return lie_transform_apply(self.Z, apply_R(self.spec.unperturbed, Coordinates(self.ring)), self.order)

    def __repr__(self):
        return f"NormalFormResult(driver={self.driver!r}, order={self.order}, X={self.X!r}, Z={self.Z!r})"


def transform_coordinates(result: NormalFormResult) -> Coordinates:
    """The conjugating change of coordinates ``h = U x`` (original -> normal coordinates)."""
    return result.normalizing_apply(Coordinates(result.ring))


def inverse_transform_coordinates(result: NormalFormResult) -> Coordinates:
    """``h^{-1}`` as a series (normal -> original coordinates)."""
    N = result.order
    x = Coordinates(result.ring)
    if result.driver == "transform":
        return lie_transform_inverse_apply(result.X, x, N)
    # inverse of exp(L_1) ... exp(L_N) is exp(-L_N) ... exp(-L_1)
    neg = GeneratingSequence(result.ring, {s: -Xs for s, Xs in result.X.items()})
    return compose_lie_series_apply(neg, x, N)


def conjugacy_defect(result: NormalFormResult) -> Functions:
    """``U(T_Z(R x)) - T_W(R(U x))`` truncated at the order; zero when the conjugacy holds."""
    N = result.order
    U = result.spec.unperturbed
    x = Coordinates(result.ring)
    left = result.normalizing_apply(lie_transform_apply(result.Z, apply_R(U, x), N))
    right = lie_transform_apply(result.W, apply_R(U, result.normalizing_apply(x)), N)
    return (left - right).truncate(N)


# ---------------------------------------------------------------------------
# drivers


def _operator(spec: MapSpec, tol_resonance, divisor_floor) -> HomologicalOperator:
    return HomologicalOperator(spec.unperturbed, spec.ring, tol_resonance, divisor_floor, spec.action_domain)


def _solve(H, psi, s, diag):
    try:
        return H.solve(psi, s, diag)
    except ResonanceError as exc:
        if exc.order is None:
            exc.order = s
        raise


def normalize_lie_transform(spec: MapSpec, order: int | None = None, tol_resonance: float = RESONANCE_TOL,
                            divisor_floor: float = DIVISOR_FLOOR,
                            on_order: Callable | None = None) -> NormalFormResult:
    """Normal form through a single Lie transform ``T_X``.

    At order ``s`` the right-hand side is
    ``psi_s = W_s - sum_{j<s} (j/s) (E^X_{s-j} Z_j - E^W_{s-j} R X_j)``;
    the solver splits it into ``Z_s`` (kernel) and a range part, and
    ``X_s = -D^{-1}(range part)`` so that ``D X_s = Z_s - psi_s``.

    ``on_order(s, psi_s, X_s, Z_s)`` is called after each order.
    """
    if order is not None:
        spec = spec.with_order(order)
    N = spec.order
    ring = spec.ring
    U = spec.unperturbed
    H = _operator(spec, tol_resonance, divisor_floor)
    diag = Diagnostics()
    V, W = factor_map(spec)
    X = GeneratingSequence(ring)
    Z = GeneratingSequence(ring)
    z_traces: dict = {}
    rx_traces: dict = {}
    psis = {}
    for s in range(1, N + 1):
        psi = W[s]
        for j in range(1, s):
            w = Fraction(j, s)
            if j in z_traces:
                psi = psi - z_traces[j][s - j].part(s).scale(w)
            if j in rx_traces:
                psi = psi + rx_traces[j][s - j].part(s).scale(w)
        psis[s] = psi
        xs, zs = _solve(H, psi, s, diag)
        xs = -xs
        X._put(s, xs)
        Z._put(s, zs)
        if on_order is not None:
            on_order(s, psi, xs, zs)
        if s < N:
            if not zs.is_zero():
                z_traces[s] = LieOperatorTrace(X, zs, N)
            if not xs.is_zero():
                rx_traces[s] = LieOperatorTrace(W, apply_R(U, xs), N)
    diag.truncated_modes = ring.report.dropped
    return NormalFormResult(spec, X, Z, W, psis, diag, "transform", V=V)


def normalize_lie_series(spec: MapSpec, order: int | None = None, tol_resonance: float = RESONANCE_TOL,
                         divisor_floor: float = DIVISOR_FLOOR,
                         on_order: Callable | None = None) -> NormalFormResult:
    """Normal form through a composition of Lie series.

    Step ``r`` conjugates ``T_{W'} o R`` (``W'`` already normal below order
    ``r``) by ``exp(L_{X_r})``: it solves with ``psi = W'_r`` and then updates
    every order ``s > r`` by

    ``Z_s = W'_s + (r/s) E^{W'}_{s-r} R X_r
    - sum_{j=1}^{floor((s-1)/r)} (s - j r)/(s j!) L_{X_r}^j Z_{s-jr}``.

    The normalizing operator is ``exp(L_{X_1}) o ... o exp(L_{X_N})``.
    """
    if order is not None:
        spec = spec.with_order(order)
    N = spec.order
    ring = spec.ring
    U = spec.unperturbed
    H = _operator(spec, tol_resonance, divisor_floor)
    diag = Diagnostics()
    V, W0 = factor_map(spec)
    current = {s: W0[s] for s in range(1, N + 1)}
    X = GeneratingSequence(ring)
    psis = {}
    for r in range(1, N + 1):
        psi = current[r]
        psis[r] = psi
        xs, zs = _solve(H, psi, r, diag)
        xr = -xs
        if on_order is not None:
            on_order(r, psi, xr, zs)
        if xr.is_zero():
            current[r] = zs
            continue
        X._put(r, xr)
        Wseq = GeneratingSequence(ring, current)
        rx_trace = LieOperatorTrace(Wseq, apply_R(U, xr), N)
        new = {s: current[s] for s in range(1, r)}
        new[r] = zs
        for s in range(r + 1, N + 1):
            acc = current[s]
            img = rx_trace[s - r]
            if not img.is_zero():
                acc = acc + img.part(s).scale(Fraction(r, s))
            for j in range(1, (s - 1) // r + 1):
                target = new[s - j * r]
                if target.is_zero():
                    continue
                term = target
                for _ in range(j):
                    term = apply_lie(xr, term, N)
                    if term.is_zero():
                        break
                if not term.is_zero():
                    acc = acc - term.part(s).scale(Fraction(s - j * r, s * math.factorial(j)))
            new[s] = acc
        current = new
    Z = GeneratingSequence(ring, current)
    diag.truncated_modes = ring.report.dropped
    return NormalFormResult(spec, X, Z, W0, psis, diag, "series", V=V)


def normalize(spec: MapSpec, driver: str = "transform", **kwargs) -> NormalFormResult:
    if driver == "transform":
        return normalize_lie_transform(spec, **kwargs)
    if driver == "series":
        return normalize_lie_series(spec, **kwargs)
    raise ValueError(f"unknown driver {driver!r}")


# ---------------------------------------------------------------------------
# reversibility


class SymmetryType(enum.Enum):
    """Parity type of a Fourier-Taylor field under ``phi -> -phi``."""

    PLUS_MINUS = "plus_minus"
    MINUS_PLUS = "minus_plus"
    NONE = "none"


def _parity(p: Poly, sign: int, tol) -> bool:
    ref = p.reflect()
    return ref.equals(p if sign > 0 else -p, tol)


def _tol(ring: Ring):
    return None if ring.domain.exact else 1e-12


def is_type(V, kind: SymmetryType) -> bool:
    """Whether ``V`` (Field or Functions) has the given parity type."""
    if kind is SymmetryType.NONE:
        return classify_symmetry(V) is SymmetryType.NONE
    tol = _tol(V.ring)
    a, b = (1, -1) if kind is SymmetryType.PLUS_MINUS else (-1, 1)
    return all(_parity(c, a, tol) for c in V.angle_block) and all(_parity(c, b, tol) for c in V.action_block)


def classify_symmetry(V) -> SymmetryType:
    """``PLUS_MINUS`` (angle block even, action block odd), ``MINUS_PLUS`` or ``NONE``.

    The zero field satisfies both; it is reported as ``PLUS_MINUS``.
    """
    if not V.ring.eps:
        raise ValueError("symmetry types are defined for Fourier-Taylor fields")
    for kind in (SymmetryType.PLUS_MINUS, SymmetryType.MINUS_PLUS):
        if is_type(V, kind):
            return kind
    return SymmetryType.NONE


def _block_violation(V, kind: SymmetryType) -> str | None:
    tol = _tol(V.ring)
    a, b = (1, -1) if kind is SymmetryType.PLUS_MINUS else (-1, 1)
    if not all(_parity(c, a, tol) for c in V.angle_block):
        return "angle"
    if not all(_parity(c, b, tol) for c in V.action_block):
        return "action"
    return None


def normalize_reversible(spec: MapSpec, order: int | None = None, strict: bool = True,
                         tol_resonance: float = RESONANCE_TOL,
                         divisor_floor: float = DIVISOR_FLOOR) -> NormalFormResult:
    """Lie-transform normalization of a reversible map with symmetry checks.

    The perturbation must have an even angle block and an odd action block.
    At every order ``psi_s`` and ``Z_s`` are required to be of type
    ``PLUS_MINUS`` with ``Z_s`` free of action terms, and ``X_s`` of type
    ``MINUS_PLUS``.  In strict mode the first violation raises
    :class:`SymmetryError` naming the order and block; otherwise violations
    are listed in ``result.symmetry_violations``.  ``result.omega_prime`` holds
    the angle shift of the normal form (``omega`` plus the ``Z`` angle blocks).
    """
    if spec.kind != "kronecker":
        raise ValueError("reversible normalization needs a Kronecker unperturbed part")
    block = _block_violation(spec.perturbation, SymmetryType.PLUS_MINUS)
    if block is not None:
        raise SymmetryError(f"perturbation is not reversible: {block} block has the wrong parity", order=0,
                            block=block)
    violations: list = []

    def record(s, what, blk):
        msg = f"order {s}: {what} breaks the symmetry in the {blk} block"
        if strict:
            raise SymmetryError(msg, order=s, block=blk)
        violations.append({"order": s, "series": what, "block": blk})

    def check(s, psi, xs, zs):
        blk = _block_violation(psi, SymmetryType.PLUS_MINUS)
        if blk:
            record(s, "psi", blk)
        blk = _block_violation(zs, SymmetryType.PLUS_MINUS)
        if blk is None and any(not c.is_zero() for c in zs.action_block):
            blk = "action"
        if blk:
            record(s, "Z", blk)
        blk = _block_violation(xs, SymmetryType.MINUS_PLUS)
        if blk:
            record(s, "X", blk)

    result = normalize_lie_transform(spec, order, tol_resonance, divisor_floor, on_order=check)
    result.symmetry_violations = violations
    nf = result.normal_form_map()
    result.omega_prime = nf.shift.angle_block
    return result
