"""Pure-Python sparse product kernel (reference implementation and fallback).

The loop order and the floating-point operation order here are mirrored
exactly by ``_ckernel.pyx`` so both backends return bit-identical results.
"""
from operator import add

__all__ = ["sum_products"]


def sum_products(items_pairs, max_weight):
    """Accumulate ``sum_i a_i * b_i`` over sparse term lists.

    Parameters
    ----------
    items_pairs : list of tuple
        Each entry is ``(a, b)`` where ``a`` and ``b`` are ``(keys, coeffs,
        weights)`` triples of equal-length tuples.
    max_weight : int
        Products whose weight (sum of factor weights) exceeds this are skipped.

    Returns
    -------
    dict
        Exponent key -> accumulated coefficient, in first-occurrence order.
        Zeros are not pruned here.
    """
    acc = {}
    get = acc.get
    for (ka, ca, wa), (kb, cb, wb) in items_pairs:
        nb = len(kb)
        for i in range(len(ka)):
            room = max_weight - wa[i]
            ki = ka[i]
            ci = ca[i]
            for j in range(nb):
                if wb[j] > room:
                    continue
                key = tuple(map(add, ki, kb[j]))
                p = ci * cb[j]
                old = get(key)
                acc[key] = p if old is None else old + p
    return acc
