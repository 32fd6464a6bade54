"""Random generators and small utilities shared by the test modules."""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from lietx.algebra import Field, Functions, Poly, ft_ring, poly_ring
from lietx.lie import GeneratingSequence
from lietx.represent import LinearPart, MapSpec


def monomials(n: int, degree: int):
    """Exponent tuples of total degree ``degree`` in ``n`` variables."""
    for c in itertools.combinations_with_replacement(range(n), degree):
        e = [0] * n
        for i in c:
            e[i] += 1
        yield tuple(e)


def small_coeff(rng, exact: bool, complex_: bool = True):
    re = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
    im = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) if complex_ else Fraction(0)
    if exact:
        return (re, im)
    return complex(float(re), float(im))


def _conv(ring, c):
    if isinstance(c, tuple):
        from lietx.coeffs import GaussQ
        return GaussQ(c[0], c[1])
    return c


def random_poly(ring, order: int, rng, density: float = 0.5, min_order: int = 0) -> Poly:
    """Homogeneous-by-order random polynomial with orders in ``[min_order, order]``."""
    exact = ring.domain.exact
    terms = {}
    for o in range(min_order, order + 1):
        for key in monomials(ring.nvars, o + 1):
            if rng.random() < density:
                terms[key] = _conv(ring, small_coeff(rng, exact))
    return Poly(ring, terms)


def random_field(ring, order: int, rng, density: float = 0.5, exact_order: bool = True) -> Field:
    lo = order if exact_order else 1
    return Field(ring, [random_poly(ring, order, rng, density, lo) for _ in range(ring.nvars)])


def random_functions(ring, lo: int, hi: int, rng, density: float = 0.4) -> Functions:
    return Functions(ring, [random_poly(ring, hi, rng, density, lo) for _ in range(ring.nvars)])


def random_sequence(ring, N: int, rng, density: float = 0.4) -> GeneratingSequence:
    return GeneratingSequence(ring, {s: random_field(ring, s, rng, density) for s in range(1, N + 1)})


def random_ft_poly(ring, order: int, kmax: int, rng, parity: int = 0, density: float = 0.5) -> Poly:
    """Random Fourier-Taylor scalar of epsilon order ``order``.

    ``parity`` +1 / -1 makes it even / odd under ``phi -> -phi``; real-valued.
    """
    na, nact = ring.n_angles, ring.n_powers
    terms = {}
    modes = list(itertools.product(range(-kmax, kmax + 1), repeat=na))
    acts = [e for d in range(0, 3) for e in monomials(nact, d)] if nact else [()]
    for k in modes:
        if k < tuple(-x for x in k):
            continue
        for a in acts:
            if rng.random() >= density:
                continue
            c = small_coeff(rng, False, complex_=False).real
            mk = tuple(-x for x in k)
            key, mkey = k + a + (order,), mk + a + (order,)
            if parity == 0:
                # real series: c_{-k} = conj(c_k)
                cc = complex(c, small_coeff(rng, False).imag) if k != mk else complex(c, 0)
                terms[key] = cc
                terms[mkey] = cc.conjugate()
            elif parity > 0:
                terms[key] = complex(c, 0)
                terms[mkey] = complex(c, 0)
            else:
                if k == mk:
                    continue
                terms[key] = complex(0, c)
                terms[mkey] = complex(0, -c)
    return Poly(ring, terms)


def random_typed_field(ring, order: int, kmax: int, rng, kind: str) -> Field:
    """Field of parity type ``"+-"`` (angle block even, action block odd) or ``"-+"``."""
    a, b = (1, -1) if kind == "+-" else (-1, 1)
    na = ring.n_angles
    comps = [random_ft_poly(ring, order, kmax, rng, a if j < na else b) for j in range(ring.nvars)]
    return Field(ring, comps)


def random_linear_spec(rng, n: int, N: int, exact: bool, density: float = 0.4) -> MapSpec:
    """Diagonal linear map with rational eigenvalues away from resonance plus random corrections."""
    ring = poly_ring(n, exact)
    while True:
        lam = [Fraction(int(rng.integers(2, 9)), int(rng.integers(9, 17))) * (1 + j) for j in range(n)]
        lam = [l if l != 1 else Fraction(1, 3) for l in lam]
        if len(set(lam)) == n:
            break
    eig = [f"{l.numerator}/{l.denominator}" for l in lam]
    f = random_functions(ring, 1, N, rng, density)
    return MapSpec(LinearPart(eig), f, N)


def ft_ring_1(exact: bool = False, cutoff=None):
    return ft_ring(1, 1, exact, cutoff)


def max_diff(a, b) -> float:
    return (a - b).max_abs()


def as_float(x) -> complex:
    return complex(x)


def seeds(count: int, base: int = 0):
    return [np.random.default_rng(base + i) for i in range(count)]
