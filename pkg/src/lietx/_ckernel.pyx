# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled sparse product kernel for float-mode series.

Exponent vectors arrive packed into uint64 words with a per-slot bias, so a
monomial product is one integer addition minus the bias.  Accumulation order
matches ``_kernel_py.sum_products`` term for term.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

cnp.import_array()


def sum_products_packed(list packed_pairs, int64_t max_weight, uint64_t bias):
    """Return ``(keys, re, im)`` arrays of the accumulated products.

    ``packed_pairs`` holds ``(ka, ra, ia, wa, kb, rb, ib, wb)`` tuples of
    contiguous arrays (uint64, float64, float64, int64).
    """
    cdef unordered_map[uint64_t, size_t] index
    cdef vector[uint64_t] keys
    cdef vector[double] res_re
    cdef vector[double] res_im
    cdef const uint64_t[::1] ka, kb
    cdef const double[::1] ra, ia, rb, ib
    cdef const int64_t[::1] wa, wb
    cdef Py_ssize_t i, j, na, nb
    cdef int64_t room
    cdef uint64_t key
    cdef double pr, pi, ar, ai
    cdef size_t pos
    cdef unordered_map[uint64_t, size_t].iterator it

    for pair in packed_pairs:
        ka, ra, ia, wa, kb, rb, ib, wb = pair
        na = ka.shape[0]
        nb = kb.shape[0]
        for i in range(na):
            room = max_weight - wa[i]
            ar = ra[i]
            ai = ia[i]
            for j in range(nb):
                if wb[j] > room:
                    continue
                key = ka[i] + kb[j] - bias
                pr = ar * rb[j] - ai * ib[j]
                pi = ar * ib[j] + ai * rb[j]
                it = index.find(key)
                if it == index.end():
                    index[key] = keys.size()
                    keys.push_back(key)
                    res_re.push_back(pr)
                    res_im.push_back(pi)
                else:
                    pos = index[key]
                    res_re[pos] = res_re[pos] + pr
                    res_im[pos] = res_im[pos] + pi

    cdef Py_ssize_t n = keys.size()
    out_k = np.empty(n, dtype=np.uint64)
    out_r = np.empty(n, dtype=np.float64)
    out_i = np.empty(n, dtype=np.float64)
    cdef uint64_t[::1] ok = out_k
    cdef double[::1] orr = out_r
    cdef double[::1] oi = out_i
    for i in range(n):
        ok[i] = keys[i]
        orr[i] = res_re[i]
        oi[i] = res_im[i]
    return out_k, out_r, out_i
