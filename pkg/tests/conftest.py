import itertools
from fractions import Fraction

import pytest

from corrwalk.models import SHIPPED, JointPath

F = Fraction

EXACT_MODELS = {k: m for k, m in SHIPPED.items() if m.exact}
FAIR_EXACT = {k: m for k, m in EXACT_MODELS.items() if m.p == F(1, 2)}


def naive_theta(model, xi_hist, eta_hist):
    """theta written out by hand for the shipped kinds, independent of ModelSpec.theta_at."""
    kind = model.kind
    if kind in ("constant-theta", "biased"):
        return model.theta
    if not xi_hist:
        return model.theta
    if kind == "q-history-theta":
        return model.params["after_common"] if xi_hist[-1] == eta_hist[-1] else model.theta
    if kind == "sign-adversarial-theta":
        return model.params["after_up"] if xi_hist[-1] == 1 else model.params["after_down"]
    raise AssertionError(kind)


def naive_path_prob(model, xi, eta):
    p = model.p
    prob = F(1)
    for n in range(len(xi)):
        th = naive_theta(model, xi[:n], eta[:n])
        a, b = xi[n], eta[n]
        if a == 1 and b == 1:
            prob *= th
        elif a == -1 and b == -1:
            prob *= 1 - 2 * p + th
        else:
            prob *= p - th
    return prob


def all_sign_paths(N):
    for steps in itertools.product(((1, 1), (1, -1), (-1, 1), (-1, -1)), repeat=N):
        yield tuple(s[0] for s in steps), tuple(s[1] for s in steps)


def brute_force(model, N, predicate):
    """Sum of naive path probabilities over paths satisfying ``predicate(JointPath)``."""
    total = F(0)
    for xi, eta in all_sign_paths(N):
        w = naive_path_prob(model, xi, eta)
        if w and predicate(JointPath.from_signs(xi, eta)):
            total += w
    return total


@pytest.fixture(params=sorted(FAIR_EXACT))
def fair_model(request):
    return FAIR_EXACT[request.param]
