"""JSON documents in and out.

Forms use 1-based, strictly increasing ``idx`` lists and polynomial strings
over a declared chart::

    {"chart": ["x", "y", "z"], "degree": 1,
     "terms": [{"coef": "-1*x", "idx": [2]}, {"coef": "1", "idx": [3]}]}

Reports are dumped with sorted keys and floats written with 17 significant
digits so that equal inputs give byte-identical output.
"""

from __future__ import annotations

import json
import math
import re
from fractions import Fraction
from typing import Any

import jsonschema
import numpy as np

from .bundleconn import CoFrame, ConnectionForm
from .coeffalg import Poly, PolyError, format_poly, parse_poly
from .extcalc import Form, PointForm

__all__ = [
    "SCHEMA_VERSION",
    "SchemaError",
    "validate_schema",
    "form_from_json",
    "form_to_json",
    "forms_from_json",
    "coframe_from_json",
    "connection_to_json",
    "parse_number",
    "number_to_json",
    "curvature_from_json",
    "curvature_to_json",
    "dumps",
]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


_TERM = {
    "type": "object",
    "required": ["coef", "idx"],
    "properties": {
        "coef": {"type": ["string", "integer"]},
        "idx": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    },
}
_FORM = {
    "type": "object",
    "required": ["degree", "terms"],
    "properties": {
        "chart": {"type": "array", "items": {"type": "string"}},
        "degree": {"type": "integer", "minimum": 0},
        "terms": {"type": "array", "items": _TERM},
    },
}
_NUMBER = {"type": ["number", "string"]}

SCHEMAS = {
    "form": {**_FORM, "required": ["chart", "degree", "terms"]},
    "system": {
        "type": "object",
        "required": ["chart", "generators"],
        "properties": {
            "chart": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "generators": {"type": "array", "items": _FORM},
            "point": {"type": "array", "items": _NUMBER},
            "flag": {"type": "array", "items": {"type": "array", "items": _NUMBER}},
            "dim": {"type": "integer", "minimum": 0},
        },
    },
    "coframe": {
        "type": "object",
        "required": ["chart", "coframe"],
        "properties": {
            "chart": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "coframe": {"type": "array", "items": _FORM, "minItems": 1},
            "point": {"type": "array", "items": _NUMBER},
            "points": {"type": "array", "items": {"type": "array", "items": _NUMBER}},
            "T": {"type": "array", "items": {"type": "array", "items": {"type": ["string", "integer"]}}},
        },
    },
    "gauss": {
        "type": "object",
        "required": ["m", "n", "kappa", "curvature", "psi"],
        "properties": {
            "m": {"type": "integer", "minimum": 2},
            "n": {"type": "integer", "minimum": 2},
            "kappa": {"type": "integer", "minimum": 1},
            "curvature": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["i", "j", "lambda", "mu", "value"],
                    "properties": {k: {"type": "integer", "minimum": 1} for k in ("i", "j", "lambda", "mu")}
                    | {"value": {"type": "number"}},
                },
            },
            "psi": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
            "involution": {"type": "boolean"},
            "flag_seed": {"type": ["integer", "null"]},
        },
    },
}


def _check_form_semantics(doc: dict, names, where: str, out: list):
    degree = doc.get("degree")
    for k, term in enumerate(doc.get("terms", [])):
        idx = term.get("idx", [])
        loc = f"{where}.terms[{k}]"
        if any(b <= a for a, b in zip(idx, idx[1:])):
            out.append(f"{loc}: idx must be strictly increasing")
        if isinstance(degree, int) and len(idx) != degree:
            out.append(f"{loc}: idx has {len(idx)} entries but degree is {degree}")
        if names is not None and idx and max(idx) > len(names):
            out.append(f"{loc}: idx entry {max(idx)} exceeds chart dimension {len(names)}")
        coef = term.get("coef")
        if isinstance(coef, str) and names is not None:
            try:
                parse_poly(coef, names)
            except PolyError as exc:
                out.append(f"{loc}.coef: {exc}")


def validate_schema(document: Any, kind: str = "form") -> list[str]:
    """Violations found in ``document``; an empty list means it is well formed."""
    if kind not in SCHEMAS:
        raise ValueError(f"unknown document kind {kind!r}")
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    out = []
    for err in sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path)):
        path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        out.append(f"${path}: {err.message}")
    if out:
        return out
    names = document.get("chart")
    if kind == "form":
        _check_form_semantics(document, names, "$", out)
    elif kind in ("system", "coframe"):
        key = "generators" if kind == "system" else "coframe"
        for k, f in enumerate(document[key]):
            _check_form_semantics(f, f.get("chart", names), f"$.{key}[{k}]", out)
        if kind == "coframe":
            for i, row in enumerate(document.get("T", [])):
                for j, c in enumerate(row):
                    try:
                        parse_poly(str(c), names)
                    except PolyError as exc:
                        out.append(f"$.T[{i}][{j}]: {exc}")
    return out


def _require(document, kind):
    violations = validate_schema(document, kind)
    if violations:
        raise SchemaError(violations)


# -- forms ---------------------------------------------------------------


def form_from_json(doc: dict, names=None) -> Form:
    names = doc.get("chart", names)
    if names is None:
        raise SchemaError(["form has no chart"])
    D = len(names)
    out = Form.zero(D, doc["degree"])
    for term in doc["terms"]:
        idx = tuple(i - 1 for i in term["idx"])
        coef = parse_poly(str(term["coef"]), names)
        out = out + Form._raw(D, doc["degree"], {idx: coef} if coef else {})
    return out


def forms_from_json(docs, names) -> list[Form]:
    return [form_from_json(d, names) for d in docs]


def form_to_json(form, names) -> dict:
    terms = []
    for idx, c in form.items():
        coef = format_poly(c, names) if isinstance(c, Poly) else number_to_json(c)
        terms.append({"coef": coef, "idx": [i + 1 for i in idx]})
    return {"chart": list(names), "degree": form.degree, "terms": terms}


def coframe_from_json(doc: dict) -> CoFrame:
    _require(doc, "coframe")
    return CoFrame(forms_from_json(doc["coframe"], doc["chart"]))


def connection_to_json(omega: ConnectionForm, names) -> list:
    return [[form_to_json(w, names) for w in row] for row in omega.entries]


# -- numbers ---------------------------------------------------------------

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_number(value):
    """Integers and ``"a/b"`` strings stay exact; anything else becomes a float."""
    if isinstance(value, bool):
        raise SchemaError([f"not a number: {value!r}"])
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        m = _RATIONAL.match(value)
        if m:
            return Fraction(int(m.group(1)), int(m.group(2) or 1))
        try:
            return float(value)
        except ValueError:
            pass
    raise SchemaError([f"not a number: {value!r}"])


def number_to_json(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


# -- curvature tensors --------------------------------------------------------


def curvature_from_json(entries, n: int, m: int) -> np.ndarray:
    R = np.zeros((n, n, m, m))
    for e in entries:
        i, j, l, u = e["i"] - 1, e["j"] - 1, e["lambda"] - 1, e["mu"] - 1
        if not (i < j < n and l < u < m):
            raise SchemaError([f"curvature entry {e} needs i<j<=n and lambda<mu<=m"])
        v = float(e["value"])
        R[i, j, l, u], R[j, i, l, u], R[i, j, u, l], R[j, i, u, l] = v, -v, -v, v
    return R


def curvature_to_json(R: np.ndarray) -> list:
    n, m = R.shape[0], R.shape[2]
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(m):
                for u in range(l + 1, m):
                    out.append({"i": i + 1, "j": j + 1, "lambda": l + 1, "mu": u + 1, "value": float(R[i, j, l, u])})
    return out


# -- canonical dump ------------------------------------------------------------


def _prepare(obj, floats: list):
    if isinstance(obj, dict):
        return {str(k): _prepare(v, floats) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v, floats) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist(), floats)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return number_to_json(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        floats.append(format(x, ".17g"))
        return f"@@float{len(floats) - 1}@@"
    if isinstance(obj, Poly):
        return obj.to_string()
    if isinstance(obj, (Form, PointForm)):
        return form_to_json(obj, [f"x{i + 1}" for i in range(obj.chart_dim)])
    return obj


def dumps(report: dict, indent: int | None = 2) -> str:
    """Sorted keys, 17-significant-digit floats and a ``schema_version`` field."""
    floats: list = []
    data = _prepare({**report, "schema_version": SCHEMA_VERSION}, floats)
    text = json.dumps(data, sort_keys=True, indent=indent, ensure_ascii=False)
    return re.sub(r'"@@float(\d+)@@"', lambda m: floats[int(m.group(1))], text)
