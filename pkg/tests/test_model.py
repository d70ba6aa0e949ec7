import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskbandit.model import ActionSet, Environment, MVInstance, mean_of, sample_reward, variance_of


def test_mean_identity_case():
    inst = MVInstance(ActionSet(np.eye(2)), np.array([1.0, 0.0]), np.zeros(2), omega=1.0)
    assert mean_of(inst, 0) == 1.0
    assert mean_of(MVInstance(ActionSet(np.eye(2)), np.zeros(2), np.zeros(2), omega=1.0), 1) == 0.0


def test_variance_direct_substitution():
    inst = MVInstance(ActionSet(np.eye(2)), np.zeros(2), np.array([0.3, 0.0]), omega=1.0)
    assert variance_of(inst, 0) == pytest.approx(1.3, abs=1e-15)
    assert variance_of(inst, 1) == 1.0


def test_index_errors(basis_instance):
    with pytest.raises(IndexError):
        mean_of(basis_instance, 3)
    with pytest.raises(IndexError):
        variance_of(basis_instance, -1)
    with pytest.raises(IndexError):
        sample_reward(Environment(basis_instance, 0), 5)


def test_scenario_one_mean_and_variance(scenario_one):
    # frozen from an independent 40-digit evaluation of the Scenario I coefficients after the common rescale
    vectors = scenario_one.actions.vectors
    venue0 = int(np.flatnonzero((vectors == [1, 0, 0, 0]).all(axis=1))[0])
    center = int(np.flatnonzero((vectors == [0.25] * 4).all(axis=1))[0])
    assert mean_of(scenario_one, venue0) == pytest.approx(0.1315999545980234955, rel=1e-14)
    assert variance_of(scenario_one, center) == pytest.approx(1.455099842990581252, rel=1e-14)


def test_sigma_bounds_match_action_set(scenario_one):
    v = [variance_of(scenario_one, i) for i in range(scenario_one.K)]
    assert min(v) == scenario_one.sigma2_min
    assert max(v) == scenario_one.sigma2_max
    assert all(scenario_one.sigma2_min <= x <= scenario_one.sigma2_max for x in v)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_linearity_in_coefficients(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((6, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    t1, t2 = rng.uniform(-0.3, 0.3, 3), rng.uniform(-0.3, 0.3, 3)
    p1, p2 = rng.uniform(-0.2, 0.2, 3), rng.uniform(-0.2, 0.2, 3)
    acts = ActionSet(X)
    a = MVInstance(acts, t1, p1, omega=1.0)
    b = MVInstance(acts, t2, p2, omega=1.0)
    ab = MVInstance(acts, t1 + t2, p1 + p2, omega=1.0)
    for i in range(6):
        assert mean_of(ab, i) == pytest.approx(mean_of(a, i) + mean_of(b, i), abs=1e-12)
        # variance carries omega once, not twice
        assert variance_of(ab, i) - 1.0 == pytest.approx(variance_of(a, i) + variance_of(b, i) - 2.0, abs=1e-12)


def test_vanishing_noise():
    inst = MVInstance(ActionSet(np.eye(2) * 0.5), np.array([0.4, -0.2]), np.zeros(2), omega=1e-12)
    env = Environment(inst, 3)
    for _ in range(100):
        assert abs(sample_reward(env, 0) - 0.2) < 1e-4


def test_determinism_seed_42(scenario_one):
    seq = np.random.default_rng(0).integers(0, scenario_one.K, size=500)
    e1, e2 = Environment(scenario_one, 42), Environment(scenario_one, 42)
    r1 = [sample_reward(e1, int(a)) for a in seq]
    r2 = [sample_reward(e2, int(a)) for a in seq]
    assert r1 == r2
    assert r1 != [sample_reward(Environment(scenario_one, 43), int(a)) for a in seq[:1]] + r1[1:]


def test_batch_pulls_match_single_pulls(scenario_one):
    seq = np.random.default_rng(1).integers(0, scenario_one.K, size=300)
    e1, e2 = Environment(scenario_one, 7), Environment(scenario_one, 7)
    singles = np.array([e1.pull(int(a)) for a in seq])
    batch = np.concatenate([e2.pull_many(seq[:100]), e2.pull_many(seq[100:])])
    np.testing.assert_array_equal(singles, batch)
    assert e1.n_draws == e2.n_draws == 300


def test_monte_carlo_moments(scenario_one):
    n = 100_000
    a = 17
    env = Environment(scenario_one, 11)
    x = env.pull_many(np.full(n, a))
    mu, var = mean_of(scenario_one, a), variance_of(scenario_one, a)
    assert abs(x.mean() - mu) < 4 * np.sqrt(var / n)
    assert abs(x.var() - var) < 0.05 * var


def test_policy_stream_is_independent(scenario_one):
    env = Environment(scenario_one, 5)
    first = env.policy_rng().integers(1 << 30, size=4)
    np.testing.assert_array_equal(first, Environment(scenario_one, 5).policy_rng().integers(1 << 30, size=4))
    before = env.pull(0)
    assert before == Environment(scenario_one, 5).pull(0)


def test_json_round_trip_lossless(scenario_one):
    back = MVInstance.from_json(scenario_one.to_json())
    np.testing.assert_array_equal(back.actions.vectors, scenario_one.actions.vectors)
    np.testing.assert_array_equal(back.theta_star, scenario_one.theta_star)
    np.testing.assert_array_equal(back.phi_star, scenario_one.phi_star)
    assert (back.omega, back.rho, back.label) == (scenario_one.omega, scenario_one.rho, scenario_one.label)
    doc = json.loads(scenario_one.to_json())
    assert set(doc) == {"d", "K", "actions", "theta_star", "phi_star", "omega", "rho", "label"}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5, allow_nan=False), min_size=2, max_size=2))
def test_json_round_trip_arbitrary_floats(theta):
    inst = MVInstance(ActionSet(np.eye(2) / 3.0), np.array(theta), np.array([0.1, 1 / 7]), omega=0.5, rho=1 / 3)
    back = MVInstance.from_json(inst.to_json())
    assert back.theta_star.tolist() == inst.theta_star.tolist()
    assert back.actions.vectors.tolist() == inst.actions.vectors.tolist()
    assert back.rho == inst.rho


def test_save_and_load(tmp_path, basis_instance):
    path = tmp_path / "inst.json"
    basis_instance.save(path)
    assert MVInstance.load(path).to_dict() == basis_instance.to_dict()


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"theta_star": np.array([1.0, 0.1])}, "theta_star"),
        ({"phi_star": np.array([0.0, 1.5])}, "phi_star"),
        ({"theta_star": np.zeros(3)}, "length"),
        ({"omega": -1.0}, "non-negative"),
    ],
)
def test_invalid_instances(kwargs, match):
    base = {"actions": ActionSet(np.eye(2)), "theta_star": np.zeros(2), "phi_star": np.zeros(2), "omega": 1.0}
    base.update(kwargs)
    with pytest.raises(ValueError, match=match):
        MVInstance(**base)


def test_action_norm_tolerance():
    ActionSet(np.array([[1.0 + 5e-13, 0.0]]))
    with pytest.raises(ValueError, match="norm"):
        ActionSet(np.array([[1.0 + 1e-9, 0.0]]))


def test_instance_arrays_are_immutable(basis_instance):
    with pytest.raises(ValueError):
        basis_instance.theta_star[0] = 1.0
    with pytest.raises(ValueError):
        basis_instance.actions.vectors[0, 0] = 0.0
