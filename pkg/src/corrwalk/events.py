"""Path events evaluated on batches of sign arrays.

An :class:`Event` maps ``(xi, eta)`` arrays of shape (rows, N) to a boolean
row mask, so the same event can be weighed by the exact oracle and counted
over simulated paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decomposition import first_hits, signs_at, decompose_batch
from .models import JointPath


@dataclass(frozen=True)
class Event:
    name: str
    fn: Callable

    def mask(self, xi, eta) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(xi), np.asarray(eta)), dtype=bool)

    def __call__(self, path: JointPath) -> bool:
        return bool(self.mask(np.array([path.xi]), np.array([path.eta]))[0])

    def __and__(self, other: "Event") -> "Event":
        return Event(f"{self.name} & {other.name}", lambda xi, eta: self.mask(xi, eta) & other.mask(xi, eta))


def _nth(xi, eta, n, common):
    Q = xi == eta
    pos = first_hits(Q if common else ~Q, n)[:, n - 1]
    return pos, signs_at(xi, pos[:, None])[:, 0]


def common_sign(n: int, sign: int) -> Event:
    """The n-th common move happens within the horizon with xi = sign."""
    def fn(xi, eta):
        pos, s = _nth(xi, eta, n, True)
        return (pos > 0) & (s == sign)

    return Event(f"xi[alpha_{n}]={sign:+d}", fn)


def counter_sign(m: int, sign: int) -> Event:
    def fn(xi, eta):
        pos, s = _nth(xi, eta, m, False)
        return (pos > 0) & (s == sign)

    return Event(f"xi[beta_{m}]={sign:+d}", fn)


def common_hit_at(n: int, h: int) -> Event:
    return Event(f"alpha_{n}={h}", lambda xi, eta: _nth(xi, eta, n, True)[0] == h)


def counter_hit_at(m: int, h: int) -> Event:
    return Event(f"beta_{m}={h}", lambda xi, eta: _nth(xi, eta, m, False)[0] == h)


def common_reached(n: int) -> Event:
    return Event(f"alpha_{n}<=N", lambda xi, eta: _nth(xi, eta, n, True)[0] > 0)


def clock_equals(t: int) -> Event:
    return Event(f"T_N={t}", lambda xi, eta: (xi == eta).sum(axis=1) == t)


def endpoint(b: int, w: int) -> Event:
    return Event(f"B_N={b},W_N={w}", lambda xi, eta: (xi.sum(axis=1) == b) & (eta.sum(axis=1) == w))


def x_final(x: int) -> Event:
    """X at the final clock value, X_{T_N}, equals x."""
    def fn(xi, eta):
        T, X, _, _, _ = decompose_batch(xi, eta)
        return X[:, -1] == x

    return Event(f"X_T_N={x}", fn)


def y_final(y: int) -> Event:
    def fn(xi, eta):
        _, _, Y, _, _ = decompose_batch(xi, eta)
        return Y[:, -1] == y

    return Event(f"Y_S_N={y}", fn)


def random_event(rng: np.random.Generator, N: int) -> Event:
    """Draw one event with non-trivial probability from a fixed menu."""
    kind = int(rng.integers(0, 8))
    sign = int(rng.choice((1, -1)))
    n = int(rng.integers(1, max(2, N // 2) + 1))
    if kind == 0:
        return common_sign(n, sign)
    if kind == 1:
        return counter_sign(n, sign)
    if kind == 2:
        return common_hit_at(n, int(rng.integers(n, N + 1)))
    if kind == 3:
        return counter_hit_at(n, int(rng.integers(n, N + 1)))
    if kind == 4:
        return clock_equals(int(rng.integers(0, N + 1)))
    if kind == 5:
        return x_final(int(rng.integers(-2, 3)))
    if kind == 6:
        return y_final(int(rng.integers(-2, 3)))
    return common_sign(1, sign) & counter_sign(1, int(rng.choice((1, -1))))
