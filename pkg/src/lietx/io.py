"""JSON and CSV serialization of series, map specifications and results.

Series documents have the shape::

    {"kind": "poly" | "fourier_taylor", "dim": n, "angles": na, "actions": m,
     "order": N, "mode": "float" | "exact",
     "terms": [{"index": s, "order": o, "component": j,
                "exponents": [...], "mode": [...], "re": ..., "im": ...}]}

Components are 1-based.  ``mode`` (Fourier index) appears only for
Fourier-Taylor series, where ``exponents`` are the action exponents.  Exact
coefficients are written as ``"p/q"`` strings.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from fractions import Fraction

from .algebra import Field, Functions, Ring, ft_ring, poly_ring
from .coeffs import GaussQ
from .lie import GeneratingSequence
from .represent import GradingError, KroneckerPart, LinearPart, MapSpec

__all__ = [
    "SpecError",
    "coeff_to_json",
    "coeff_from_json",
    "sequence_to_json",
    "sequence_from_json",
    "functions_to_json",
    "spec_from_json",
    "load_spec",
    "result_to_json",
    "rows_for_csv",
    "dumps",
    "write_atomic",
]


class SpecError(ValueError):
    """Malformed specification or result document."""


def _num_to_json(x, exact: bool):
    if exact:
        q = Fraction(int(x.numerator), int(x.denominator))
        return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    return float(x)


def coeff_to_json(c, exact: bool) -> tuple:
    if exact:
        c = GaussQ.coerce(c)
        return _num_to_json(c.re, True), _num_to_json(c.im, True)
    c = complex(c)
    return c.real, c.imag


def _parse_real(x, exact: bool):
    if isinstance(x, bool):
        raise SpecError("coefficients must be numbers or 'p/q' strings")
    if isinstance(x, str):
        try:
            return Fraction(x.strip()) if exact else float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"bad number {x!r}") from exc
    if isinstance(x, int):
        return Fraction(x) if exact else float(x)
    if isinstance(x, float):
        # decimal reading: 0.4 means 2/5, not the nearest binary fraction
        return Fraction(repr(x)) if exact else x
    raise SpecError(f"bad number {x!r}")


def coeff_from_json(re, im, exact: bool):
    a, b = _parse_real(re, exact), _parse_real(im if im is not None else 0, exact)
    return GaussQ(a, b) if exact else complex(a, b)


def _ring_header(ring: Ring) -> dict:
    return {
        "kind": ring.kind,
        "dim": ring.nvars,
        "angles": ring.n_angles,
        "actions": ring.n_powers if ring.eps else 0,
        "mode": "exact" if ring.domain.exact else "float",
    }


def _term_json(ring: Ring, index, j: int, key, c) -> dict:
    exact = ring.domain.exact
    re, im = coeff_to_json(c, exact)
    t = {"index": index, "order": ring.order(key), "component": j + 1}
    if ring.eps:
        t["mode"] = list(key[: ring.n_angles])
        t["exponents"] = list(key[ring.n_angles : ring.nvars])
    else:
        t["exponents"] = list(key)
    t["re"] = re
    t["im"] = im
    return t


def _sorted_terms(vec):
    return sorted(vec.terms(), key=lambda t: (t[0], t[1]))


def sequence_to_json(seq: GeneratingSequence, order: int) -> dict:
    ring = seq.ring
    terms = []
    for s, X in seq.items():
        for j, key, c in sorted(X.terms(), key=lambda t: (ring.order(t[1]), t[0], t[1])):
            terms.append(_term_json(ring, s, j, key, c))
    return {**_ring_header(ring), "order": order, "terms": terms}


def functions_to_json(F, order: int) -> dict:
    ring = F.ring
    terms = [_term_json(ring, None, j, key, c) for j, key, c in sorted(F.terms(), key=lambda t: (ring.order(t[1]), t[0], t[1]))]
    for t in terms:
        del t["index"]
    return {**_ring_header(ring), "order": order, "terms": terms}


def _ring_from_header(doc: dict, exact: bool | None = None, fourier_cutoff=None) -> Ring:
    try:
        kind = doc["kind"]
        mode_exact = doc.get("mode", "float") == "exact" if exact is None else exact
        if kind == "poly":
            return poly_ring(int(doc["dim"]), mode_exact)
        if kind == "fourier_taylor":
            return ft_ring(int(doc["angles"]), int(doc["actions"]), mode_exact, fourier_cutoff)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad series header: {exc}") from exc
    raise SpecError(f"unknown series kind {doc.get('kind')!r}")


def _key_from_term(ring: Ring, t: dict, default_order: int | None = None) -> tuple:
    try:
        if ring.eps:
            mode = [int(k) for k in t.get("mode", [0] * ring.n_angles)]
            exps = [int(e) for e in t.get("exponents", [0] * ring.n_powers)]
            order = int(t.get("order", default_order if default_order is not None else 1))
            if len(mode) != ring.n_angles or len(exps) != ring.n_powers:
                raise SpecError(f"term {t} does not match {ring.n_angles} angles and {ring.n_powers} actions")
            if any(e < 0 for e in exps) or order < 0:
                raise SpecError(f"negative exponent in {t}")
            return tuple(mode + exps + [order])
        exps = [int(e) for e in t["exponents"]]
        if len(exps) != ring.nvars or any(e < 0 for e in exps):
            raise SpecError(f"term {t} does not match dimension {ring.nvars}")
        if "order" in t and int(t["order"]) != sum(exps) - 1:
            raise GradingError(f"term {t} has degree {sum(exps)} but order {t['order']}")
        return tuple(exps)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (SpecError, GradingError)):
            raise
        raise SpecError(f"bad term {t}: {exc}") from exc


def _component(ring: Ring, t: dict) -> int:
    try:
        j = int(t["component"]) - 1
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad component in {t}") from exc
    if not 0 <= j < ring.nvars:
        raise SpecError(f"component {j + 1} out of range 1..{ring.nvars}")
    return j


def sequence_from_json(doc: dict, ring: Ring | None = None) -> tuple[GeneratingSequence, int]:
    if ring is None:
        ring = _ring_from_header(doc)
    exact = ring.domain.exact
    elems: dict = {}
    try:
        terms = doc["terms"]
        order = int(doc["order"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad sequence document: {exc}") from exc
    for t in terms:
        key = _key_from_term(ring, t)
        s = int(t.get("index") or ring.order(key))
        elems.setdefault(s, []).append((_component(ring, t), key, coeff_from_json(t.get("re", 0), t.get("im", 0), exact)))
    return GeneratingSequence(ring, {s: Field.from_terms(ring, ts) for s, ts in elems.items()}), order


# ---------------------------------------------------------------------------
# map specifications


def spec_from_json(doc: dict, order: int | None = None, cutoff: int | None = None, mode: str | None = None) -> MapSpec:
    """Build a :class:`MapSpec` from its JSON form (overrides from the command line win)."""
    if not isinstance(doc, dict):
        raise SpecError("specification must be a JSON object")
    exact = (mode or doc.get("mode", "float")) == "exact"
    kind = doc.get("kind")
    N = order if order is not None else doc.get("order")
    try:
        N = int(N)
    except (TypeError, ValueError) as exc:
        raise SpecError("missing or bad 'order'") from exc
    if N < 1:
        raise SpecError("order must be at least 1")
    try:
        if kind == "linear":
            eig = doc["eigenvalues"]
            if not isinstance(eig, list) or not eig:
                raise SpecError("'eigenvalues' must be a non-empty list")
            vals = []
            for e in eig:
                if isinstance(e, list):
                    if len(e) != 2:
                        raise SpecError("complex eigenvalues are [re, im] pairs")
                    vals.append((e[0], e[1]) if exact else complex(_parse_real(e[0], False), _parse_real(e[1], False)))
                else:
                    vals.append(e if exact else _parse_real(e, False))
            part = LinearPart([_exact_pair(v) if exact else v for v in vals], doc.get("frequencies"))
            ring = poly_ring(part.n, exact)
        elif kind == "kronecker":
            if exact:
                raise SpecError("Kronecker specifications need float mode")
            n = int(doc.get("angles", 1))
            m = int(doc.get("actions", 1))
            omega = []
            for w in doc["omega"]:
                if isinstance(w, list):
                    omega.append({tuple(int(e) for e in t["exponents"]): _parse_real(t["value"], False) for t in w})
                else:
                    omega.append(_parse_real(w, False))
            if len(omega) != n:
                raise SpecError(f"'omega' needs {n} components")
            center = doc.get("center")
            part = KroneckerPart(omega, m, int(doc.get("degree_cap", 6)), center)
            K = cutoff if cutoff is not None else doc.get("fourier_cutoff")
            ring = ft_ring(n, m, False, int(K) if K is not None else None)
        else:
            raise SpecError(f"unknown map kind {kind!r}")
        pert = doc.get("perturbation", [])
        if not isinstance(pert, list):
            raise SpecError("'perturbation' must be a list of terms")
        terms = []
        for t in pert:
            if not isinstance(t, dict):
                raise SpecError("perturbation terms must be objects")
            key = _key_from_term(ring, t)
            terms.append((_component(ring, t), key, coeff_from_json(t.get("re", 0), t.get("im", 0), exact)))
        f = Functions.from_terms(ring, terms)
    except KeyError as exc:
        raise SpecError(f"missing field {exc}") from exc
    except (TypeError, ZeroDivisionError) as exc:
        raise SpecError(str(exc)) from exc
    domain = doc.get("action_domain")
    eps = float(doc.get("epsilon", 1.0))
    return MapSpec(part, f, N, epsilon=eps, action_domain=domain, name=doc.get("name"))


def _exact_pair(v):
    if isinstance(v, tuple):
        return (str(Fraction(str(v[0]))) if not isinstance(v[0], str) else v[0],
                str(Fraction(str(v[1]))) if not isinstance(v[1], str) else v[1])
    if isinstance(v, str):
        return v
    return str(Fraction(str(v)))


def load_spec(path: str, **overrides) -> MapSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_json(doc, **overrides)


# ---------------------------------------------------------------------------
# results and output


def result_to_json(result) -> dict:
    N = result.order
    out = {
        "driver": result.driver,
        "order": N,
        "X": sequence_to_json(result.X, N),
        "Z": sequence_to_json(result.Z, N),
        "W": sequence_to_json(result.W, N),
        "diagnostics": result.diagnostics.to_dict(),
    }
    if getattr(result, "symmetry_violations", None):
        out["symmetry_violations"] = result.symmetry_violations
    return out


def rows_for_csv(doc: dict) -> list:
    """Flatten every series found in ``doc`` to ``series,order,component,exponents/mode,re,im`` rows."""
    rows = [["series", "order", "component", "exponents/mode", "re", "im"]]
    for name in sorted(doc):
        sub = doc[name]
        if not (isinstance(sub, dict) and "terms" in sub):
            continue
        for t in sub["terms"]:
            if "mode" in t:
                where = " ".join(map(str, t["mode"])) + " | " + " ".join(map(str, t["exponents"]))
            else:
                where = " ".join(map(str, t["exponents"]))
            rows.append([name, t["order"], t["component"], where, t["re"], t["im"]])
    return rows


def dumps(doc, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in rows_for_csv(doc):
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path: str, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".lietx-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
