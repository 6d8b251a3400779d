import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from corrwalk import rng as rngmod
from corrwalk.models import (
    ALL_PAIRS, MM, MP, PM, PP, SHIPPED, JointPath, ModelError, ModelSpec, SignPair, biased, constant,
    gaussian, gaussian_theta, parse_model, q_history, sample_gaussian_pair, sample_step, sign_adversarial,
    simulate, simulate_batch, step_distribution, validate_model,
)


def orthant_quadrature(rho):
    # P(Z1 > 0, Z2 > 0) = int_0^inf phi(x) Phi(rho x / sqrt(1 - rho^2)) dx
    if rho == 1:
        return 0.5
    if rho == -1:
        return 0.0
    s = math.sqrt(1 - rho * rho)
    val, _ = integrate.quad(lambda x: stats.norm.pdf(x) * stats.norm.cdf(rho * x / s), 0, np.inf,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def test_signpair_rejects_zero():
    with pytest.raises(ValueError):
        SignPair(0, 1)


def test_step_distribution_independent_coins():
    assert step_distribution(constant("1/4"), ()) == {PP: F(1, 4), PM: F(1, 4), MP: F(1, 4), MM: F(1, 4)}


def test_step_distribution_comonotone():
    d = step_distribution(constant("1/2"), (PP, MM))
    assert d == {PP: F(1, 2), PM: 0, MP: 0, MM: F(1, 2)}


def test_step_distribution_biased_solves_constraints():
    d = step_distribution(biased("7/10", "1/2"), ())
    assert d == {PP: F(1, 2), PM: F(1, 5), MP: F(1, 5), MM: F(1, 10)}
    # oracle: the four linear constraints
    assert d[PP] + d[PM] == F(7, 10) and d[PP] + d[MP] == F(7, 10)
    assert d[PM] == d[MP] and sum(d.values()) == 1


def test_float_pmf_sums_within_tolerance():
    d = step_distribution(gaussian(0.37), ())
    assert abs(sum(d.values()) - 1) < 1e-12


@pytest.mark.parametrize("model, message", [
    (constant("0.6"), "outside"),
    (biased("7/10", "3/10"), "outside"),
    (constant("-1/10"), "outside"),
    (q_history("1/4", "3/5"), "outside"),
    (sign_adversarial("1/4", "1/5", "1/5"), "depend"),
    (ModelSpec("constant-theta", theta=F(1, 4), p=F(3, 5)), "p = 1/2"),
    (gaussian(1.5), "rho"),
])
def test_validate_rejects(model, message):
    with pytest.raises(ModelError, match=message):
        validate_model(model)


def test_validate_reports_offending_history():
    bad = sign_adversarial("1/4", "3/5", "1/10")
    with pytest.raises(ModelError, match="history of length 1"):
        validate_model(bad)


def test_validate_accepts():
    assert validate_model(constant("1/3")) == constant("1/3")
    for model in SHIPPED.values():
        validate_model(model)


def test_sample_step_degenerate():
    g = rngmod.stream(1, rngmod.AUX)
    for _ in range(200):
        s = sample_step(constant("1/2"), (), g)
        assert s.xi == s.eta
        s = sample_step(constant(0), (), g)
        assert s.xi == -s.eta


def test_sample_step_frequencies():
    g = rngmod.stream(2, rngmod.AUX)
    n = 200_000
    counts = {p: 0 for p in ALL_PAIRS}
    model = constant("1/4")
    for _ in range(n):
        counts[sample_step(model, (), g)] += 1
    sigma = math.sqrt(0.25 * 0.75 / n)
    for c in counts.values():
        assert abs(c / n - 0.25) < 3 * sigma


def test_batch_pair_frequencies_million():
    xi, eta = simulate_batch(constant("1/4"), 1, 1_000_000, seed=3)
    sigma = math.sqrt(0.25 * 0.75 / 1e6)
    for a, b in ALL_PAIRS:
        freq = np.mean((xi[:, 0] == a) & (eta[:, 0] == b))
        assert abs(freq - 0.25) < 3 * sigma


def test_simulate_rejects_zero_steps():
    with pytest.raises(ValueError):
        simulate(constant("1/4"), 0, seed=1)


def test_simulate_single_step():
    path = simulate(constant("1/4"), 1, seed=5)
    assert len(path) == 1 and isinstance(path.pairs[0], SignPair)


def test_simulate_deterministic():
    assert simulate(constant("1/4"), 10, seed=11) == simulate(constant("1/4"), 10, seed=11)
    assert simulate(SHIPPED["adversarial"], 50, seed=11) == simulate(SHIPPED["adversarial"], 50, seed=11)


def test_simulate_comonotone_walks_coincide():
    path = simulate(constant("1/2"), 100, seed=4)
    assert path.B == path.W


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_batch_independent_of_threads_and_reps(name):
    model = SHIPPED[name]
    a = simulate_batch(model, 16, 10_000, seed=8, threads=1)
    b = simulate_batch(model, 16, 10_000, seed=8, threads=4)
    c = simulate_batch(model, 16, 5_000, seed=8)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.array_equal(a[0][:5_000], c[0]) and np.array_equal(a[1][:5_000], c[1])


def test_gaussian_theta_examples():
    assert gaussian_theta(0) == 0.25
    assert gaussian_theta(1) == 0.5
    assert abs(gaussian_theta(0.5) - 1 / 3) < 1e-15
    with pytest.raises(ValueError):
        gaussian_theta(1.01)


def test_gaussian_theta_matches_quadrature_grid():
    for rho in np.linspace(-1, 1, 41):
        assert abs(gaussian_theta(float(rho)) - orthant_quadrature(float(rho))) < 1e-10


def test_sample_gaussian_pair_extremes():
    g = rngmod.stream(3, rngmod.AUX)
    for _ in range(100):
        s = sample_gaussian_pair(1.0, g)
        assert s.xi == s.eta
        s = sample_gaussian_pair(-1.0, g)
        assert s.xi == -s.eta


def test_gaussian_pair_law_matches_constant_model():
    n = 1_000_000
    xi, eta = simulate_batch(gaussian(0.5), 1, n, seed=21)
    target = step_distribution(gaussian(0.5), ())
    for pair in ALL_PAIRS:
        freq = np.mean((xi[:, 0] == pair.xi) & (eta[:, 0] == pair.eta))
        p = float(target[pair])
        assert abs(freq - p) < 4 * math.sqrt(p * (1 - p) / n)
    assert abs(target[PP] - 1 / 3) < 1e-15


def test_scalar_gaussian_sampler_frequency():
    g = rngmod.stream(4, rngmod.AUX)
    n = 100_000
    hits = sum(1 for _ in range(n) if sample_gaussian_pair(0.5, g) == PP)
    assert abs(hits / n - 1 / 3) < 4 * math.sqrt(2 / 9 / n)


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_json_round_trip(name):
    model = SHIPPED[name]
    doc = json.loads(json.dumps(model.to_json()))
    assert ModelSpec.from_json(doc) == model


def test_json_rationals_are_integer_pairs():
    doc = constant("1/3").to_json()
    assert doc["theta"] == {"num": 1, "den": 3}
    assert doc["p"] == {"num": 1, "den": 2}


@pytest.mark.parametrize("text, expected", [
    ("constant:1/4", constant("1/4")),
    ("q-history:1/4,3/8", SHIPPED["q-history"]),
    ("adversarial:1/4,2/5,1/10", SHIPPED["adversarial"]),
    ("biased:0.7,0.5", biased("7/10", "1/2")),
    ("gaussian:0.5", gaussian(0.5)),
    ("constant-1/3", constant("1/3")),
    ('{"kind": "constant-theta", "theta": {"num": 1, "den": 4}}', constant("1/4")),
])
def test_parse_model(text, expected):
    assert parse_model(text) == expected


def test_parse_model_rejects_garbage():
    with pytest.raises(ModelError):
        parse_model("wiggly:3")


def test_exact_flag():
    assert constant("1/4").exact
    assert not gaussian(0.2).exact
    assert not biased(0.7, 0.5).exact


histories = st.lists(st.sampled_from(ALL_PAIRS), max_size=12).map(tuple)
fair_models = st.sampled_from([m for m in SHIPPED.values() if m.p == F(1, 2)])
any_models = st.sampled_from(list(SHIPPED.values()))


@given(any_models, histories)
def test_pmf_normalised_and_nonnegative(model, history):
    d = step_distribution(model, history)
    assert all(v >= 0 for v in d.values())
    if model.exact:
        assert sum(d.values()) == 1
    else:
        assert abs(sum(d.values()) - 1) < 1e-12


@given(fair_models, histories)
def test_flip_symmetry(model, history):
    d = step_distribution(model, history)
    assert d[PP] == d[MM] and d[PM] == d[MP]


@given(any_models, histories)
def test_marginals_equal_p(model, history):
    d = step_distribution(model, history)
    tol = 0 if model.exact else 1e-12
    assert abs(d[PP] + d[PM] - model.p) <= tol
    assert abs(d[PP] + d[MP] - model.p) <= tol


@settings(max_examples=50)
@given(st.fractions(min_value=F(1, 100), max_value=F(99, 100)), st.fractions(min_value=0, max_value=1))
def test_biased_validity_region(p, theta):
    model = biased(p, theta)
    valid = max(0, 2 * p - 1) <= theta <= p
    if valid:
        validate_model(model)
    else:
        with pytest.raises(ModelError):
            validate_model(model)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([(1, 1), (1, -1), (-1, 1), (-1, -1)]), min_size=1, max_size=30))
def test_jointpath_walk_invariants(steps):
    path = JointPath(tuple(steps))
    prev_b = prev_w = 0
    for b, w in zip(path.B, path.W):
        assert abs(b - prev_b) == 1 and abs(w - prev_w) == 1
        prev_b, prev_w = b, w
    assert JointPath.from_walks(path.B, path.W) == path
