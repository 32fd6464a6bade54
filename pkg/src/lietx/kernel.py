"""Backend selection for the sparse series product.

The compiled extension is used for float-mode products when it imports and
the exponents fit the packed representation; everything else goes through the
pure-Python loop.  ``LIETX_KERNEL=python`` forces the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

try:  # pragma: no cover - depends on build
    from . import _ckernel
except ImportError:  # pragma: no cover
    _ckernel = None

__all__ = ["BACKEND", "available_backends", "sum_products", "set_backend"]

# below this many term pairs the array conversion costs more than it saves
MIN_PAIRS_FOR_COMPILED = 64


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _ckernel is not None else [])


def _initial_backend() -> str:
    choice = os.environ.get("LIETX_KERNEL", "auto").lower()
    if choice == "python" or _ckernel is None:
        return "python"
    return "cython"


BACKEND = _initial_backend()


def set_backend(name: str) -> str:
    """Switch backend at runtime; returns the previous one."""
    global BACKEND
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    previous, BACKEND = BACKEND, name
    return previous


class _Packing:
    """Bias-packed uint64 layout for exponent keys of a fixed length."""

    def __init__(self, nkey: int):
        self.nkey = nkey
        self.bits = min(64 // nkey, 32) if nkey else 0
        self.half = 1 << (self.bits - 1) if self.bits else 0
        self.shifts = np.arange(nkey, dtype=np.uint64) * np.uint64(self.bits)
        self.bias = int(sum(self.half << (self.bits * s) for s in range(nkey)))
        self.mask = np.uint64((1 << self.bits) - 1) if self.bits else np.uint64(0)

    def usable(self) -> bool:
        return 0 < self.nkey and self.bits >= 4

    def pack(self, keys: np.ndarray) -> np.ndarray:
        biased = (keys + self.half).astype(np.uint64)
        return np.bitwise_or.reduce(biased << self.shifts, axis=1) if len(keys) else np.zeros(0, np.uint64)

    def unpack(self, packed: np.ndarray) -> np.ndarray:
        slots = (packed[:, None] >> self.shifts) & self.mask
        return slots.astype(np.int64) - self.half


_packings: dict[int, _Packing] = {}


def _packing(nkey: int) -> _Packing:
    p = _packings.get(nkey)
    if p is None:
        p = _packings[nkey] = _Packing(nkey)
    return p


def _packed(poly, packing: _Packing):
    cache = poly._cache
    arrs = cache.get("packed")
    if arrs is None:
        keys, coeffs, weights = poly.items()
        k = np.array(keys, dtype=np.int64).reshape(len(keys), packing.nkey)
        c = np.array(coeffs, dtype=np.complex128)
        arrs = (
            np.ascontiguousarray(packing.pack(k)),
            np.ascontiguousarray(c.real),
            np.ascontiguousarray(c.imag),
            np.array(weights, dtype=np.int64),
            int(np.abs(k).max()) if len(keys) else 0,
        )
        cache["packed"] = arrs
    return arrs


def sum_products(ring, pairs, max_weight: int) -> dict:
    """Return unpruned ``{key: coeff}`` of ``sum(a * b for a, b in pairs)``.

    Products of weight above ``max_weight`` are dropped (order truncation).
    """
    pairs = [(a, b) for a, b in pairs if a.terms and b.terms]
    if not pairs:
        return {}
    if BACKEND == "cython" and not ring.domain.exact:
        work = sum(len(a.terms) * len(b.terms) for a, b in pairs)
        packing = _packing(ring.nkey)
        if work >= MIN_PAIRS_FOR_COMPILED and packing.usable():
            result = _sum_products_compiled(pairs, max_weight, packing)
            if result is not None:
                return result
    return _kernel_py.sum_products([(a.items(), b.items()) for a, b in pairs], max_weight)


def _sum_products_compiled(pairs, max_weight, packing):
    packed_pairs = []
    limit = packing.half - 1
    for a, b in pairs:
        ka, ra, ia, wa, ma = _packed(a, packing)
        kb, rb, ib, wb, mb = _packed(b, packing)
        if ma + mb >= limit:
            return None
        packed_pairs.append((ka, ra, ia, wa, kb, rb, ib, wb))
    keys, re, im = _ckernel.sum_products_packed(packed_pairs, int(max_weight), np.uint64(packing.bias))
    if not len(keys):
        return {}
    coeffs = np.empty(len(keys), dtype=np.complex128)
    coeffs.real = re
    coeffs.imag = im
    exps = packing.unpack(keys).tolist()
    return dict(zip(map(tuple, exps), coeffs.tolist()))
