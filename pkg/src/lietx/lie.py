"""Lie derivatives, Lie series, Lie transforms and compositions of Lie series.

All operators are applied to a *target*: a scalar :class:`~lietx.algebra.Poly`,
a :class:`~lietx.algebra.Field` (acted on by commutators), a
:class:`~lietx.algebra.Functions` tuple (acted on componentwise) or
:class:`~lietx.algebra.Coordinates` (the identity map, ``L_X x = X``).
Everything is truncated at a maximal order ``N``.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .algebra import (
    Coordinates,
    DimensionError,
    Field,
    Functions,
    Poly,
    Ring,
    commutator,
    lie_derivative,
)

__all__ = [
    "GeneratingSequence",
    "LieOperatorTrace",
    "apply_lie",
    "exp_lie",
    "lie_transform_apply",
    "lie_transform_inverse_apply",
    "compose_lie_series_apply",
    "reordered_E",
    "operator_words",
    "apply_words",
    "zero_like",
    "is_zero",
    "min_order",
]


class GeneratingSequence:
    """Sequence ``{X_1, X_2, ...}`` of vector fields indexed from 1.

    Element ``s`` normally has order exactly ``s``; sequences produced by
    :func:`lietx.represent.commute_past` may carry higher-order tails in an
    element, never lower orders.  Missing elements are zero fields.
    """

    __slots__ = ("ring", "_elements")

    def __init__(self, ring: Ring, elements: Mapping[int, Field] | Iterable[Field] | None = None):
        self.ring = ring
        if elements is None:
            elements = {}
        elif not isinstance(elements, Mapping):
            elements = {s: X for s, X in enumerate(elements, start=1)}
        clean = {}
        for s, X in elements.items():
            if s < 1:
                raise ValueError("generating sequences are indexed from 1")
            if not isinstance(X, Field):
                raise TypeError(f"element {s} is {type(X).__name__}, expected Field")
            if X.ring is not ring:
                ring.check(X.ring)
            if not X.is_zero():
                clean[int(s)] = X
        self._elements = dict(sorted(clean.items()))

    @property
    def kind(self) -> str:
        return self.ring.kind

    def __getitem__(self, s: int) -> Field:
        X = self._elements.get(s)
        return X if X is not None else Field.zero(self.ring)

    def get(self, s: int) -> Field | None:
        """Element ``s`` or ``None`` when it is zero."""
        return self._elements.get(s)

    def items(self):
        return self._elements.items()

    def indices(self) -> list[int]:
        return list(self._elements)

    @property
    def max_index(self) -> int:
        return max(self._elements, default=0)

    def is_zero(self) -> bool:
        return not self._elements

    def _put(self, s: int, X: Field) -> None:
        # drivers grow sequences in place while traces read them
        if X.is_zero():
            self._elements.pop(s, None)
        else:
            self._elements[s] = X

    def truncate(self, order: int) -> "GeneratingSequence":
        return GeneratingSequence(self.ring, {s: X.truncate(order) for s, X in self._elements.items() if s <= order})

    def check_grading(self) -> None:
        """Raise ``ValueError`` unless element ``s`` has order exactly ``s``."""
        for s, X in self._elements.items():
            if X.orders() != {s}:
                raise ValueError(f"element {s} has orders {sorted(X.orders())}")

    def equals(self, other: "GeneratingSequence", tol: float | None = None, upto: int | None = None) -> bool:
        idx = set(self._elements) | set(other._elements)
        if upto is not None:
            idx = {s for s in idx if s <= upto}
        return all(self[s].equals(other[s], tol) for s in idx)

    def __eq__(self, other):
        if not isinstance(other, GeneratingSequence):
            return NotImplemented
        return self.ring == other.ring and self._elements == other._elements

    __hash__ = None

    def __add__(self, other: "GeneratingSequence") -> "GeneratingSequence":
        idx = sorted(set(self._elements) | set(other._elements))
        return GeneratingSequence(self.ring, {s: self[s] + other[s] for s in idx})

    def __neg__(self):
        return GeneratingSequence(self.ring, {s: -X for s, X in self._elements.items()})

    def __repr__(self):
        return f"GeneratingSequence({self.kind}, indices={self.indices()})"


def zero_like(target):
    if isinstance(target, Poly):
        return target.ring.zero()
    if isinstance(target, Field):
        return Field.zero(target.ring)
    if isinstance(target, (Functions, Coordinates)):
        return Functions.zero(target.ring)
    raise TypeError(f"unsupported target {type(target).__name__}")


def is_zero(target) -> bool:
    return target.is_zero()


def min_order(target) -> int | None:
    return target.min_order()


def apply_lie(X: Field, target, order: int | None = None):
    """One Lie derivative ``L_X target`` truncated at ``order``."""
    if isinstance(target, Poly):
        return lie_derivative(X, target, order)
    if isinstance(target, Field):
        return commutator(X, target, order)
    if isinstance(target, Functions):
        return Functions(target.ring, [lie_derivative(X, c, order) for c in target.comps])
    if isinstance(target, Coordinates):
        image = Functions(X.ring, X.comps)
        if order is not None:
            image = image.truncate(order)
        if not target.shift.is_zero():
            image = image + apply_lie(X, target.shift, order)
        return image
    raise TypeError(f"unsupported target {type(target).__name__}")


def _check_ring(X_ring: Ring, target) -> None:
    if target.ring is not X_ring:
        try:
            X_ring.check(target.ring)
        except DimensionError:
            raise


def _skip(X: Field, prev, order: int | None) -> bool:
    if prev.is_zero():
        return True
    if order is None:
        return False
    mo = X.min_order()
    po = prev.min_order()
    return mo is not None and po is not None and mo + po > order


class LieOperatorTrace:
    """Memoized images ``E_s(target)`` of one Lie transform computation.

    ``trace[s]`` computes ``E_s target = sum_{j=1}^{s} (j/s) L_{X_j} E_{s-j} target``
    on demand, reusing every lower image.  The sequence may keep growing while
    the trace is alive (normalization drivers rely on this): ``E_s`` only reads
    ``X_1 .. X_s``.
    """

    def __init__(self, X: GeneratingSequence, target, order: int):
        _check_ring(X.ring, target)
        self.X = X
        self.order = order
        self.images = [target.truncate(order)]

    @property
    def max_order(self) -> int:
        return len(self.images) - 1

    def __getitem__(self, s: int):
        images = self.images
        X = self.X
        N = self.order
        while len(images) <= s:
            m = len(images)
            acc = zero_like(images[0])
            for j in range(1, m + 1):
                Xj = X.get(j)
                if Xj is None:
                    continue
                prev = images[m - j]
                if _skip(Xj, prev, N):
                    continue
                acc = acc + apply_lie(Xj, prev, N).scale(Fraction(j, m))
            images.append(acc)
        return images[s]

    def total(self, upto: int | None = None):
        """``sum_{s=0}^{upto} E_s target``."""
        t = self.images[0]
        t0 = t.min_order()
        if t0 is None:
            return t
        upto = self.order - t0 if upto is None else upto
        result = t
        for s in range(1, upto + 1):
            img = self[s]
            if not img.is_zero():
                result = result + img
        return result


def exp_lie(X: Field, target, order: int, order_tag: int = 1, max_terms: int | None = None):
    """Lie series ``exp(L_X) target = sum_s (1/s!) L_X^s target`` truncated at ``order``.

    ``order_tag`` is the order carried by ``X``; every application of ``L_X``
    raises the order by that much, which bounds the number of terms.  A field
    of order 0 (e.g. a linear field on C^n) needs ``max_terms``, unless its
    powers vanish on their own.
    """
    _check_ring(X.ring, target)
    target = target.truncate(order)
    t0 = target.min_order()
    if t0 is None or X.is_zero():
        return target
    actual = X.min_order()
    tag = min(order_tag, actual) if order_tag >= 1 else actual
    result = target
    term = target
    k = 0
    while True:
        k += 1
        if max_terms is not None and k >= max_terms:
            break
        if tag >= 1 and t0 + k * tag > order:
            break
        if tag < 1 and max_terms is None and k > 1000:
            raise ValueError("Lie series of an order-0 field did not terminate; pass max_terms")
        term = apply_lie(X, term, order).scale(Fraction(1, k))
        if term.is_zero():
            break
        result = result + term
    return result


def lie_transform_apply(X: GeneratingSequence, target, order: int):
    """Lie transform ``T_X target = sum_s E_s target`` truncated at ``order``."""
    return LieOperatorTrace(X, target, order).total()


def operator_words(X: GeneratingSequence, s: int, kind: str = "E") -> dict[tuple, Fraction]:
    """Expand ``E_s`` or ``G_s`` into words of Lie derivatives.

    A word ``(k1, ..., kr)`` stands for ``L_{X_k1} L_{X_k2} ... L_{X_kr}``
    (``L_{X_kr}`` acts first).  Only nonzero elements of ``X`` appear.
    """
    nz = [j for j in X.indices() if j <= s]
    table: list[dict[tuple, Fraction]] = [{(): Fraction(1)}]
    for m in range(1, s + 1):
        words: dict[tuple, Fraction] = {}
        for j in nz:
            if j > m:
                break
            w_j = Fraction(j, m)
            for w, c in table[m - j].items():
                new = (j,) + w if kind == "E" else w + (j,)
                coef = c * w_j if kind == "E" else -c * w_j
                words[new] = words.get(new, 0) + coef
        table.append({w: c for w, c in words.items() if c})
    return table[s]


def apply_words(X: GeneratingSequence, words: Mapping[tuple, Fraction], target, order: int):
    """Apply ``sum_w c_w L_w`` to ``target``, sharing common suffixes."""
    memo = {(): target}

    def image(word):
        r = memo.get(word)
        if r is None:
            inner = image(word[1:])
            Xk = X.get(word[0])
            if Xk is None or _skip(Xk, inner, order):
                r = zero_like(target)
            else:
                r = apply_lie(Xk, inner, order)
            memo[word] = r
        return r

    acc = None
    for w, c in words.items():
        if not c:
            continue
        if w == ():
            term = target if c == 1 else target.scale(c)
        else:
            img = image(w)
            if img.is_zero():
                continue
            term = img.scale(c)
        acc = term if acc is None else (acc + term if not isinstance(term, Coordinates) else term + acc)
    return acc if acc is not None else zero_like(target)


def lie_transform_inverse_apply(X: GeneratingSequence, target, order: int):
    """Inverse Lie transform ``sum_s G_s target`` with ``G_s = -sum_j (j/s) G_{s-j} L_{X_j}``."""
    _check_ring(X.ring, target)
    target = target.truncate(order)
    t0 = target.min_order()
    if t0 is None:
        return target
    result = target
    for s in range(1, order - t0 + 1):
        words = operator_words(X, s, "G")
        if words:
            img = apply_words(X, words, target, order)
            if not img.is_zero():
                result = result + img
    return result


def reordered_E(X: GeneratingSequence, s: int, target, order: int):
    """The reordered operator ``:E_s:`` applied to ``target``.

    Every word of ``E_s`` is sorted so that indices are non-increasing from
    the left, i.e. ``L_{X_1}`` acts first.
    """
    _check_ring(X.ring, target)
    if s == 0:
        return target
    words: dict[tuple, Fraction] = {}
    for w, c in operator_words(X, s, "E").items():
        key = tuple(sorted(w, reverse=True))
        words[key] = words.get(key, 0) + c
    return apply_words(X, words, target.truncate(order), order)


def compose_lie_series_apply(
    X: GeneratingSequence, target, order: int, up_to: int | None = None, reverse: bool = False
):
    """Composition of Lie series ``exp(L_{X_r}) o ... o exp(L_{X_1})`` applied to ``target``.

    ``exp(L_{X_1})`` acts on the target first and ``exp(L_{X_r})`` last.
    With ``reverse=True`` the product ``exp(L_{X_1}) o ... o exp(L_{X_r})``
    is applied instead (``exp(L_{X_r})`` acts first), which is the operator
    built by the step-by-step normalization.
    """
    _check_ring(X.ring, target)
    r = order if up_to is None else up_to
    if r > order:
        raise ValueError("up_to cannot exceed the truncation order")
    idx = [k for k in X.indices() if k <= r]
    if reverse:
        idx.reverse()
    result = target.truncate(order)
    for k in idx:
        result = exp_lie(X[k], result, order, order_tag=k)
    return result

