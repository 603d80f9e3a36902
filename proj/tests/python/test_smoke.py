"""Smoke tests for the python bindings: thin checks that the main
operations round-trip through numpy correctly; the C++ suites carry the
numerical depth."""

import math

import numpy as np
import pytest

import ropl


def make_dataset(n=40, k=3, d=2, seed=0):
    rng = np.random.default_rng(seed)
    contexts = rng.normal(size=(n, d))
    propensities = rng.uniform(0.2, 1.0, size=(n, k))
    propensities /= propensities.sum(axis=1, keepdims=True)
    actions = [int(rng.integers(0, k)) for _ in range(n)]
    rewards = rng.uniform(-1.0, 1.0, size=n)
    return ropl.LoggedDataset(contexts, actions, rewards, propensities)


def test_feasible_interval_matches_known_values():
    lo, hi = ropl.feasible_interval(np.array([0.5, 0.5]), 0, math.log(2.0))
    assert lo == pytest.approx(0.25, abs=1e-12)
    assert hi == pytest.approx(0.75, abs=1e-12)


def test_estimators_and_bounds_collapse_at_alpha_zero():
    data = make_dataset()
    probs = np.asarray(data.propensities)
    point = ropl.ips_value(data, probs)
    cert = ropl.ips_bound(data, probs, 0.0)
    assert cert["value"] == pytest.approx(point, abs=1e-10)
    assert cert["direction"] == "lower"
    assert np.allclose(cert["p_star"], probs[np.arange(data.n), data.actions])


def test_sandwich_and_certificate_shapes():
    data = make_dataset(seed=3)
    rng = np.random.default_rng(5)
    probs = rng.uniform(0.1, 1.0, size=(data.n, data.k))
    probs /= probs.sum(axis=1, keepdims=True)
    lower = rng.uniform(-1.0, 0.0, size=(data.n, data.k))
    upper = lower + rng.uniform(0.0, 1.0, size=(data.n, data.k))
    lo = ropl.dr_bound(data, probs, 0.4, lower, upper, "lower")
    hi = ropl.dr_bound(data, probs, 0.4, lower, upper, "upper")
    assert lo["value"] <= hi["value"]
    assert lo["r_star"].shape == (data.n, data.k)
    point = 0.5 * (lower + upper)
    mid = ropl.dr_value(data, probs, point)
    assert lo["value"] - 1e-10 <= mid <= hi["value"] + 1e-10


def test_validation_rejects_bad_propensities():
    with pytest.raises(ValueError):
        ropl.LoggedDataset(
            np.zeros((2, 1)),
            [0, 1],
            np.zeros(2),
            np.array([[0.7, 0.5], [0.5, 0.5]]),
        )


def test_convert_oracle_and_perturbation():
    rng = np.random.default_rng(7)
    n, k = 120, 3
    labels = [int(i % k) for i in range(n)]
    centers = np.array([[2.5, 0.0], [-1.25, 2.17], [-1.25, -2.17]])
    features = centers[labels] + rng.normal(scale=0.6, size=(n, 2))
    data = ropl.convert_supervised(features, labels, seed=11)
    assert data.n == n and data.k == k
    full = np.asarray(data.full_reward_matrix)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    assert ropl.oracle_value(onehot, full) == pytest.approx(1.0)

    perturbed = ropl.sample_perturbed_policy(np.asarray(data.propensities), 0.5, 3)
    ratios = perturbed / np.asarray(data.propensities)
    assert ratios.max() <= math.exp(0.5) + 1e-12
    assert ratios.min() >= math.exp(-0.5) - 1e-12


def test_reward_bounds_and_learning_loop():
    rng = np.random.default_rng(9)
    n, k = 90, 3
    labels = [int(i % k) for i in range(n)]
    centers = np.array([[2.5, 0.0], [-1.25, 2.17], [-1.25, -2.17]])
    features = centers[labels] + rng.normal(scale=0.6, size=(n, 2))
    data = ropl.convert_supervised(features, labels, seed=1)
    lower, upper, clamps = ropl.build_reward_bounds(
        data, 0.3, seed=2, learning_rates=[0.3], max_depths=[2], n_rounds=20
    )
    assert lower.shape == (n, k)
    assert (lower <= upper + 1e-12).all()
    assert clamps >= 0

    result = ropl.learn_dr(
        data, 0.3, lower, upper, hidden_size=3, inner_steps=40, outer_max=4, seed=5
    )
    records = result["records"]
    assert 1 <= len(records) <= 4
    accepted = [r["lower_bound"] for r in records if r["accepted"]]
    assert accepted == sorted(accepted)
    probs = ropl.policy_probs_from_json(result["policy_json"], np.asarray(data.contexts))
    assert probs.shape == (n, k)
    assert np.allclose(probs.sum(axis=1), 1.0)


def test_theory_helpers():
    delta = 3.0 * math.exp(-1.0)
    assert ropl.generalization_slack(0.25, 1.0, 1.0, 3200, delta) == pytest.approx(
        -0.9, abs=1e-12
    )
    uniform = np.full((1, 2), 0.5)
    value = ropl.rademacher_mc([uniform], draws=20000, seed=3)
    assert value == pytest.approx(0.25, abs=0.01)


def test_fit_constant_binary_rewards():
    alpha = 0.5 * math.log(3.0)
    assert ropl.fit_constant([0.0, 1.0], alpha, "lower") == pytest.approx(0.25)
    assert ropl.fit_constant([0.0, 1.0], alpha, "upper") == pytest.approx(0.75)
