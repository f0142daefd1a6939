"""Problem data loading, polytope basics and validation checks."""

import json

import numpy as np
import pytest

from regionalmpc import load_config, save_config
from regionalmpc.errors import DimensionError, ParseError
from regionalmpc.model import (
    HalfspacePolytope,
    box_polytope,
    is_detectable,
    is_stabilizable,
    matrix_sqrt_psd,
    validate_ocp,
)

from conftest import CONFIG_DIR


def test_example_dimensions(ex1, pend):
    assert (ex1.spec.n, ex1.spec.m, ex1.spec.N) == (2, 1, 4)
    assert (pend.spec.n, pend.spec.m, pend.spec.N) == (4, 1, 10)


def test_box_polytope_membership():
    box = box_polytope([-1.0, -2.0], [1.0, 2.0])
    assert box.num_rows == 4
    assert box.contains([0.5, -1.5])
    assert not box.contains([1.1, 0.0])
    # upper bound row first per variable
    assert np.allclose(box.C[0], [1.0, 0.0]) and box.c[0] == 1.0


def test_normalization_preserves_membership():
    rng = np.random.default_rng(3)
    C = rng.standard_normal((12, 3)) * np.logspace(-2, 2, 12)[:, None]
    c = rng.standard_normal(12) + 2.0
    poly = HalfspacePolytope(C, c)
    scaled = poly.normalized()
    pts = rng.uniform(-3, 3, size=(1000, 3))
    for z in pts:
        assert poly.contains(z, tol=1e-9) == scaled.contains(z, tol=1e-9)


def test_polytope_shape_errors():
    with pytest.raises(DimensionError):
        HalfspacePolytope(np.eye(2), np.ones(3))
    box = box_polytope([-1], [1])
    with pytest.raises(DimensionError):
        box.contains([1.0, 2.0])


def test_validation_accepts_examples(ex1, pend):
    assert validate_ocp(ex1.spec) == []
    assert validate_ocp(pend.spec) == []


def test_stabilizability_and_detectability():
    A = np.array([[1.2, 0.0], [0.0, 0.5]])
    B = np.array([[1.0], [0.0]])
    assert is_stabilizable(A, B)
    # unstable mode unreachable from the input
    assert not is_stabilizable(A, np.array([[0.0], [1.0]]))
    Qs = matrix_sqrt_psd(np.diag([1.0, 0.0]))
    assert not is_detectable(Qs, np.array([[0.5, 0.0], [0.0, 1.1]]))


def test_config_roundtrip(tmp_path, ex1):
    path = tmp_path / "copy.json"
    save_config(ex1.spec, path)
    again = load_config(path)
    assert np.allclose(again.sys.A, ex1.spec.sys.A)
    assert np.allclose(again.Q, ex1.spec.Q)
    assert again.N == ex1.spec.N
    assert np.allclose(again.Xset.C, ex1.spec.Xset.C)


def test_config_rejects_missing_keys(tmp_path):
    path = tmp_path / "bad.json"
    raw = json.loads((CONFIG_DIR / "ex1.json").read_text())
    del raw["Q"]
    path.write_text(json.dumps(raw))
    with pytest.raises(ParseError):
        load_config(path)
