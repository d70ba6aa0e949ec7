import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_g, projected_gradient_design
from riskbandit.design import g_of, solve_g_optimal
from riskbandit.errors import RankDeficient
from riskbandit.model import ActionSet


def unit_rows(rng, K, d):
    X = rng.standard_normal((K, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def test_orthonormal_basis_is_uniform():
    design = solve_g_optimal(ActionSet(np.eye(3)))
    assert design.support == [0, 1, 2]
    for q in design.weights.values():
        assert q == pytest.approx(1 / 3, abs=1e-9)
    assert design.g_value == pytest.approx(3.0, abs=1e-9)


def test_two_collinear_plus_basis():
    # e1 duplicated: the mass on the e1 direction is 1/2 in total
    X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    design = solve_g_optimal(X)
    w = design.as_array(3)
    assert w[0] + w[1] == pytest.approx(0.5, abs=1e-3)
    assert w[2] == pytest.approx(0.5, abs=1e-3)


def test_rank_deficient_raises_with_rank():
    X = np.array([[1.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(RankDeficient, match="2"):
        solve_g_optimal(X)


def test_subspace_mode_handles_rank_deficiency():
    X = np.array([[1.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]])
    design = solve_g_optimal(X, subspace=True)
    assert design.dim == 2
    assert design.g_value <= 2 * 1.001


def test_single_action_in_subspace():
    design = solve_g_optimal(np.array([[0.3, 0.4]]), subspace=True)
    assert design.weights == {0: 1.0}
    assert design.dim == 1


def test_against_projected_gradient_oracle():
    rng = np.random.default_rng(0)
    X = unit_rows(rng, 20, 3)
    w_ref = projected_gradient_design(X, gap=1e-7)
    design = solve_g_optimal(X)
    w = design.as_array(20)
    assert design.g_value <= 3 * 1.001
    ld_ref = np.linalg.slogdet(X.T @ (w_ref[:, None] * X))[1]
    ld = np.linalg.slogdet(X.T @ (w[:, None] * X))[1]
    # concavity bound: logdet(opt) - logdet(w) <= g(w) - d
    assert ld_ref - ld <= design.g_value - 3 + 1e-9
    assert ld <= ld_ref + 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 5), st.integers(0, 40))
def test_design_properties(seed, d, extra):
    rng = np.random.default_rng(seed)
    K = d + extra
    X = unit_rows(rng, K, d) * rng.uniform(0.2, 1.0, size=(K, 1))
    design = solve_g_optimal(X)
    w = design.as_array(K)
    assert np.all(w >= 0)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert len(design.support) <= d * (d + 1) // 2
    assert d - 1e-6 <= design.g_value <= d * 1.001
    assert design.g_value == pytest.approx(dense_g(X, w), rel=1e-8)
    assert design.duality_gap == pytest.approx(max(design.g_value - d, 0.0))


def test_g_of_accepts_mapping_and_array():
    X = np.eye(2)
    assert g_of(X, {0: 0.5, 1: 0.5}) == pytest.approx(2.0)
    assert g_of(X, np.array([0.25, 0.75])) == pytest.approx(4.0)


def test_json_shape():
    doc = json.loads(solve_g_optimal(np.eye(2)).to_json())
    assert set(doc) == {"support", "weights", "g", "gap"}
    assert len(doc["support"]) == len(doc["weights"])


def test_bad_tolerance():
    with pytest.raises(ValueError):
        solve_g_optimal(np.eye(2), tolerance=0.0)
