import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given

from edsbench.cli import run
from edsbench.gaussmap import random_curvature
from edsbench.serialize import (SCHEMA_VERSION, curvature_from_json, curvature_to_json, dumps, form_from_json,
                                form_to_json, number_to_json, parse_number, validate_schema)

from conftest import forms

DATA = Path(__file__).parent / "data"
XYZ = ["x", "y", "z"]


def invoke(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def form_doc(terms, degree=1, chart=XYZ):
    return {"chart": chart, "degree": degree, "terms": terms}


# -- schema validation ---------------------------------------------------------------


def test_well_formed_form_is_ok():
    assert validate_schema(form_doc([{"coef": "-1*x", "idx": [2]}, {"coef": "1", "idx": [3]}])) == []


def test_idx_not_increasing():
    v = validate_schema(form_doc([{"coef": "1", "idx": [2, 1]}], degree=2))
    assert len(v) == 1 and "idx must be strictly increasing" in v[0]


def test_unknown_variable_is_named():
    v = validate_schema(form_doc([{"coef": "w + x", "idx": [1]}]))
    assert len(v) == 1 and "'w'" in v[0]


def test_structural_violations():
    assert validate_schema({"chart": XYZ, "terms": []})
    assert validate_schema(form_doc([{"coef": "1", "idx": [4]}]))
    assert validate_schema(form_doc([{"coef": "1", "idx": [1, 2]}]))
    assert validate_schema({"chart": XYZ, "generators": "nope"}, "system")
    with pytest.raises(ValueError):
        validate_schema({}, "nonsense")


def test_data_files_validate():
    for name, kind in (("i1", "system"), ("i2", "system"), ("symplectic", "system"),
                       ("polar", "coframe"), ("gauss221", "gauss")):
        assert validate_schema(json.loads((DATA / f"{name}.json").read_text()), kind) == []


# -- round trips ----------------------------------------------------------------------


@given(forms(3, 1))
def test_form_round_trip_is_canonical(f):
    doc = form_to_json(f, XYZ)
    assert form_from_json(doc) == f
    again = form_to_json(form_from_json(json.loads(json.dumps(doc))), XYZ)
    assert again == doc


def test_number_round_trip():
    for v in (Fraction(3, 7), Fraction(-2), 0.1, 1e-300):
        assert parse_number(number_to_json(v)) == v
    assert parse_number(3) == Fraction(3)


def test_curvature_round_trip():
    R = random_curvature(3, 3, np.random.default_rng(0))
    entries = curvature_to_json(R)
    assert all(e["i"] < e["j"] and e["lambda"] < e["mu"] for e in entries)
    assert np.array_equal(curvature_from_json(entries, 3, 3), R)


def test_dumps_is_stable():
    text = dumps({"b": 0.1, "a": [1, Fraction(1, 3)]})
    doc = json.loads(text)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert list(doc) == sorted(doc)
    assert doc["b"] == 0.1 and "0.10000000000000001" in text
    assert dumps(doc, None) == dumps(json.loads(dumps(doc, None)), None)


# -- command line ---------------------------------------------------------------------


def test_frobenius_verdicts():
    code, out = invoke("frobenius", "--input", str(DATA / "i1.json"))
    rep = json.loads(out)
    assert code == 1 and rep["integrable"] is False and rep["witness"] == "-1 dx^dy^dz"
    code, out = invoke("frobenius", "--input", str(DATA / "i2.json"))
    assert code == 0 and json.loads(out)["integrable"] is True


def test_dims_flags():
    code, out = invoke("dims", "--m", "2", "--n", "2", "--kappa", "1")
    rep = json.loads(out)
    assert code == 0
    assert (rep["dim_sigma"], rep["dim_K"], rep["dim_Z"]) == (5, 1, 7)
    assert rep["schema_version"] == SCHEMA_VERSION and rep["command"] == "dims"


def test_cartan_test_symplectic():
    code, out = invoke("cartan-test", "--input", str(DATA / "symplectic.json"))
    rep = json.loads(out)
    assert code == 0 and rep["characters"] == [0, 1] and rep["ordinary"]


def test_close_and_levi_civita_and_conserve():
    code, out = invoke("close", "--input", str(DATA / "i1.json"))
    assert code == 0 and json.loads(out)["added"] == 1
    code, out = invoke("levi-civita", "--input", str(DATA / "polar.json"))
    assert code == 0 and json.loads(out)["christoffel"][0][1][1] == "-2/3"
    code, out = invoke("conserve", "--input", str(DATA / "polar.json"))
    rep = json.loads(out)
    assert code == 0 and rep["codomain_dim"] == 3 and all(p["agree"] for p in rep["pointwise"])


def test_gauss_solve_is_byte_identical():
    first = invoke("gauss-solve", "--input", str(DATA / "gauss221.json"), "--seed", "5")
    second = invoke("gauss-solve", "--input", str(DATA / "gauss221.json"), "--seed", "5")
    assert first[0] == 0 and first == second
    rep = json.loads(first[1])
    assert rep["involution"]["ordinary"] and rep["config"]["seed"] == 5


def test_input_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"chart": ["x"], ')
    code, out = invoke("frobenius", "--input", str(bad))
    assert code == 2 and "malformed JSON at line 1" in json.loads(out)["error"]
    bad.write_text(json.dumps({"chart": XYZ, "generators": [form_doc([{"coef": "1", "idx": [3, 2]}], 2)]}))
    code, out = invoke("frobenius", "--input", str(bad))
    assert code == 2 and any("strictly increasing" in v for v in json.loads(out)["violations"])
    assert invoke("frobenius")[0] == 2
    assert invoke("frobenius", "--input", str(tmp_path / "missing.json"))[0] == 2
    assert invoke("no-such-verb")[0] == 2
    assert invoke("dims", "--m", "2")[0] == 2


def test_compact_output():
    code, out = invoke("dims", "--m", "3", "--n", "2", "--kappa", "2", "--json-indent", "-1")
    assert code == 0 and out.count("\n") == 1
