"""Joint increment models for a pair of +-1 walks and their simulation.

A model fixes, for every history of past steps, the probability ``theta``
that both walks step up together. With marginal up-probability ``p`` the
one-step law is

    (+1, +1) -> theta
    (+1, -1) -> p - theta
    (-1, +1) -> p - theta
    (-1, -1) -> 1 - 2p + theta

which requires ``max(0, 2p - 1) <= theta <= p``.
"""

from __future__ import annotations

import json
import math
from itertools import accumulate
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

from . import rng as rngmod

Prob = Union[Fraction, float]

CONSTANT = "constant-theta"
Q_HISTORY = "q-history-theta"
ADVERSARIAL = "sign-adversarial-theta"
BIASED = "biased"
GAUSSIAN = "gaussian"
KINDS = (CONSTANT, Q_HISTORY, ADVERSARIAL, BIASED, GAUSSIAN)

HALF = Fraction(1, 2)


class ModelError(ValueError):
    """A model specification violates one of its invariants."""


@dataclass(frozen=True)
class SignPair:
    xi: int
    eta: int

    def __post_init__(self):
        if self.xi not in (1, -1) or self.eta not in (1, -1):
            raise ValueError(f"signs must be +1 or -1, got ({self.xi}, {self.eta})")

    @property
    def common(self) -> bool:
        return self.xi == self.eta

    def __iter__(self):
        return iter((self.xi, self.eta))


PP, PM, MP, MM = SignPair(1, 1), SignPair(1, -1), SignPair(-1, 1), SignPair(-1, -1)
ALL_PAIRS = (PP, PM, MP, MM)

History = tuple  # tuple[SignPair, ...]; steps 1..n-1 when querying step n


_INTERN = {(p.xi, p.eta): p for p in ALL_PAIRS}


def as_pair(value) -> SignPair:
    if type(value) is SignPair:
        return value
    pair = _INTERN.get((int(value[0]), int(value[1])))
    if pair is None:
        raise ValueError(f"signs must be +1 or -1, got {tuple(value)}")
    return pair


@dataclass(frozen=True)
class JointPath:
    """A finite realisation of (B, W). ``B[i]`` is B_{i+1}; B_0 = W_0 = 0."""

    pairs: tuple
    B: tuple = field(init=False, repr=False)
    W: tuple = field(init=False, repr=False)
    xi: tuple = field(init=False, repr=False, compare=False)
    eta: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs = tuple(map(as_pair, self.pairs))
        xi = tuple(p.xi for p in pairs)
        eta = tuple(p.eta for p in pairs)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "B", tuple(accumulate(xi)))
        object.__setattr__(self, "W", tuple(accumulate(eta)))

    def __len__(self):
        return len(self.pairs)

    @classmethod
    def from_walks(cls, B: Sequence[int], W: Sequence[int]) -> "JointPath":
        if len(B) != len(W):
            raise ValueError(f"B and W lengths differ: {len(B)} != {len(W)}")
        pairs = []
        pb = pw = 0
        for n, (b, w) in enumerate(zip(B, W), start=1):
            db, dw = int(b) - pb, int(w) - pw
            if abs(db) != 1 or abs(dw) != 1:
                raise ValueError(f"step {n} is not a +-1 lattice step: ({db}, {dw})")
            pairs.append(_INTERN[(db, dw)])
            pb, pw = int(b), int(w)
        return cls(tuple(pairs))

    @classmethod
    def from_signs(cls, xi: Sequence[int], eta: Sequence[int]) -> "JointPath":
        if len(xi) != len(eta):
            raise ValueError(f"sign sequences differ in length: {len(xi)} != {len(eta)}")
        return cls(tuple(zip(xi, eta)))


def _prob(value) -> Prob:
    """Coerce user input to an exact Fraction where possible."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("probability cannot be a bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, dict):
        return Fraction(int(value["num"]), int(value["den"]))
    return float(value)


@dataclass(frozen=True)
class ModelSpec:
    """A dependence model for the joint increments.

    ``params`` holds kind-specific extras:

    * q-history: ``after_common`` -- theta used when the previous step was a
      common move (``theta`` otherwise, and at step 1);
    * sign-adversarial: ``after_up`` / ``after_down`` -- theta used when the
      previous xi was +1 / -1 (``theta`` at step 1).
    """

    kind: str
    theta: Prob | None = None
    p: Prob = HALF
    rho: float | None = None
    params: dict = field(default_factory=dict, hash=False, compare=True)

    @property
    def exact(self) -> bool:
        if self.kind == GAUSSIAN:
            return False
        values = [self.theta, self.p, *self.params.values()]
        return all(isinstance(v, Fraction) for v in values)

    def theta_at(self, history: History) -> Prob:
        """theta_n for the step following ``history``."""
        kind = self.kind
        if kind in (CONSTANT, BIASED):
            return self.theta
        if kind == GAUSSIAN:
            return gaussian_theta(self.rho)
        if not history:
            return self.theta
        last = history[-1]
        if kind == Q_HISTORY:
            return self.params["after_common"] if last.xi == last.eta else self.theta
        if kind == ADVERSARIAL:
            return self.params["after_up"] if last.xi == 1 else self.params["after_down"]
        raise ModelError(f"unknown model kind {kind!r}")

    def theta_batch(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray | float:
        """Vectorised theta_n given history arrays of shape (rows, n-1)."""
        kind = self.kind
        if kind in (CONSTANT, BIASED):
            return float(self.theta)
        if kind == GAUSSIAN:
            return gaussian_theta(self.rho)
        if xi.shape[1] == 0:
            return float(self.theta)
        if kind == Q_HISTORY:
            common = xi[:, -1] == eta[:, -1]
            return np.where(common, float(self.params["after_common"]), float(self.theta))
        if kind == ADVERSARIAL:
            up = xi[:, -1] == 1
            return np.where(up, float(self.params["after_up"]), float(self.params["after_down"]))
        raise ModelError(f"unknown model kind {kind!r}")

    @property
    def history_free(self) -> bool:
        return self.kind in (CONSTANT, BIASED, GAUSSIAN)

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return {"num": v.numerator, "den": v.denominator}
            return v

        doc = {"kind": self.kind, "p": enc(self.p)}
        if self.theta is not None:
            doc["theta"] = enc(self.theta)
        if self.rho is not None:
            doc["rho"] = self.rho
        doc["params"] = {k: enc(v) for k, v in sorted(self.params.items())}
        return doc

    @classmethod
    def from_json(cls, doc: dict | str) -> "ModelSpec":
        if isinstance(doc, str):
            doc = json.loads(doc)
        kind = doc["kind"]
        if kind not in KINDS:
            raise ModelError(f"unknown model kind {kind!r}; expected one of {KINDS}")
        theta = doc.get("theta")
        return cls(
            kind=kind,
            theta=None if theta is None else _prob(theta),
            p=_prob(doc.get("p", HALF)),
            rho=None if doc.get("rho") is None else float(doc["rho"]),
            params={k: _prob(v) for k, v in doc.get("params", {}).items()},
        )

    def label(self) -> str:
        if self.kind == CONSTANT:
            return f"constant:{self.theta}"
        if self.kind == Q_HISTORY:
            return f"q-history:{self.theta},{self.params['after_common']}"
        if self.kind == ADVERSARIAL:
            return f"adversarial:{self.theta},{self.params['after_up']},{self.params['after_down']}"
        if self.kind == BIASED:
            return f"biased:{self.p},{self.theta}"
        return f"gaussian:{self.rho!r}"


# -- constructors -----------------------------------------------------------


def constant(theta) -> ModelSpec:
    return ModelSpec(CONSTANT, theta=_prob(theta))


def q_history(theta, after_common) -> ModelSpec:
    return ModelSpec(Q_HISTORY, theta=_prob(theta), params={"after_common": _prob(after_common)})


def sign_adversarial(theta, after_up, after_down) -> ModelSpec:
    return ModelSpec(
        ADVERSARIAL,
        theta=_prob(theta),
        params={"after_up": _prob(after_up), "after_down": _prob(after_down)},
    )


def biased(p, theta) -> ModelSpec:
    return ModelSpec(BIASED, theta=_prob(theta), p=_prob(p))


def gaussian(rho: float) -> ModelSpec:
    return ModelSpec(GAUSSIAN, rho=float(rho))


SHIPPED = {
    "constant-1/4": constant("1/4"),
    "constant-1/3": constant("1/3"),
    "constant-1/2": constant("1/2"),
    "q-history": q_history("1/4", "3/8"),
    "adversarial": sign_adversarial("1/4", "2/5", "1/10"),
    "biased-3/5": biased("3/5", "1/2"),
    "biased-7/10": biased("7/10", "1/2"),
    "gaussian-0.5": gaussian(0.5),
}

_ALIASES = {
    "constant": CONSTANT,
    "q-history": Q_HISTORY,
    "adversarial": ADVERSARIAL,
    "sign-adversarial": ADVERSARIAL,
}


def parse_model(text: str) -> ModelSpec:
    """Parse a model from a shipped name, ``kind:args``, inline JSON or ``@file``."""
    text = text.strip()
    if text.startswith("@"):
        return ModelSpec.from_json(Path(text[1:]).read_text(encoding="utf-8"))
    if text.startswith("{"):
        return ModelSpec.from_json(text)
    if text in SHIPPED:
        return SHIPPED[text]
    kind, _, rest = text.partition(":")
    args = [a for a in rest.split(",") if a.strip()]
    kind = _ALIASES.get(kind, kind)
    try:
        if kind == CONSTANT and len(args) == 1:
            return constant(args[0])
        if kind == Q_HISTORY and len(args) == 2:
            return q_history(*args)
        if kind == ADVERSARIAL and len(args) == 3:
            return sign_adversarial(*args)
        if kind == BIASED and len(args) == 2:
            return biased(*args)
        if kind == GAUSSIAN and len(args) == 1:
            return gaussian(float(args[0]))
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"cannot parse model {text!r}: {exc}") from exc
    raise ModelError(
        f"cannot parse model {text!r}; use e.g. constant:1/4, q-history:1/4,3/8, "
        "adversarial:1/4,2/5,1/10, biased:7/10,1/2, gaussian:0.5 or a shipped name "
        f"({', '.join(SHIPPED)})"
    )


# -- one-step law -----------------------------------------------------------


def _check_theta(theta: Prob, p: Prob, history: History = ()) -> None:
    lo = max(0, 2 * p - 1)
    # float kinds get a hair of slack for the arcsin round-off at rho = +-1
    slack = 0 if isinstance(theta, Fraction) and isinstance(p, Fraction) else 1e-15
    if not (lo - slack <= theta <= p + slack):
        hist = "".join("+" if s.xi == 1 else "-" for s in history) or "<empty>"
        raise ModelError(
            f"theta={theta} outside [{lo}, {p}] after history of length {len(history)} "
            f"(xi signs {hist})"
        )


def step_distribution(model: ModelSpec, history: History = ()) -> dict:
    theta = model.theta_at(history)
    p = model.p
    _check_theta(theta, p, history)
    return {PP: theta, PM: p - theta, MP: p - theta, MM: 1 - 2 * p + theta}


_validated: dict = {}


def validate_model(spec: ModelSpec, probe_depth: int = 10, random_probes: int = 10_000) -> ModelSpec:
    """Check kind consistency and the theta range over probed histories.

    Exact kinds are probed exhaustively over every history with non-zero mass
    up to ``probe_depth`` steps, then on ``random_probes`` random longer
    histories. Results are memoised per model.
    """
    key = (json.dumps(spec.to_json(), sort_keys=True, default=str), probe_depth, random_probes)
    if key in _validated:
        return spec
    if spec.kind not in KINDS:
        raise ModelError(f"unknown model kind {spec.kind!r}")
    p = spec.p
    if not 0 < p < 1:
        raise ModelError(f"marginal p must lie in (0, 1), got {p}")
    if spec.kind != BIASED and p != HALF:
        raise ModelError(f"kind {spec.kind} requires p = 1/2, got {p}")
    if spec.kind == GAUSSIAN:
        if spec.rho is None or not -1 <= spec.rho <= 1:
            raise ModelError(f"gaussian kind needs rho in [-1, 1], got {spec.rho}")
        if spec.theta is not None or spec.params:
            raise ModelError("gaussian kind takes only rho (theta is derived from it)")
        _validated[key] = True
        return spec
    if spec.theta is None:
        raise ModelError(f"kind {spec.kind} needs theta")
    needed = {Q_HISTORY: {"after_common"}, ADVERSARIAL: {"after_up", "after_down"}}.get(spec.kind, set())
    if set(spec.params) != needed:
        raise ModelError(f"kind {spec.kind} expects params {sorted(needed)}, got {sorted(spec.params)}")
    if spec.kind == ADVERSARIAL and spec.params["after_up"] == spec.params["after_down"]:
        raise ModelError("sign-adversarial model must depend on the previous sign (after_up == after_down)")

    seen: dict = {}

    def masses(history: tuple) -> tuple:
        theta = spec.theta_at(history)
        cached = seen.get(theta)
        if cached is None:
            dist = step_distribution(spec, history)
            cached = seen[theta] = tuple(dist[pair] > 0 for pair in ALL_PAIRS)
        return cached

    def walk(history: tuple, depth: int):
        live = masses(history)
        if depth == 1:
            return
        for pair, alive in zip(ALL_PAIRS, live):
            if alive:
                walk(history + (pair,), depth - 1)

    if spec.history_free:
        step_distribution(spec, ())
    else:
        walk((), probe_depth)
        g = rngmod.stream(0, rngmod.AUX)
        for _ in range(random_probes):
            length = int(g.integers(probe_depth, 4 * probe_depth))
            codes = g.integers(0, 4, size=length)
            masses(tuple(ALL_PAIRS[c] for c in codes))
    _validated[key] = True
    return spec


# -- sampling ---------------------------------------------------------------


def gaussian_theta(rho: float) -> float:
    """P(Z1 > 0, Z2 > 0) for standard normals with correlation ``rho``."""
    if not -1 <= rho <= 1:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    return 0.25 + math.asin(rho) / (2 * math.pi)


def _sign(x):
    return np.where(x > 0, 1, -1).astype(np.int8)


def sample_gaussian_pair(rho: float, rng: np.random.Generator) -> SignPair:
    if not -1 <= rho <= 1:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    z1, z2 = rng.standard_normal(2)
    second = rho * z1 + math.sqrt(1 - rho * rho) * z2
    # tie rule: a non-positive increment is a down move
    return SignPair(1 if z1 > 0 else -1, 1 if second > 0 else -1)


def _pairs_from_uniform(u, theta, p):
    """Map uniforms to sign pairs using cumulative masses theta, p, 2p - theta."""
    xi = np.where(u < p, 1, -1).astype(np.int8)
    eta = np.where((u < theta) | ((u >= p) & (u < 2 * p - theta)), 1, -1).astype(np.int8)
    return xi, eta


def sample_step(model: ModelSpec, history: History, rng: np.random.Generator) -> SignPair:
    if model.kind == GAUSSIAN:
        return sample_gaussian_pair(model.rho, rng)
    dist = step_distribution(model, history)
    u = rng.random()
    acc = 0.0
    for pair in ALL_PAIRS:
        acc += float(dist[pair])
        if u < acc:
            return pair
    return MM


def _simulate_chunk(model: ModelSpec, n: int, seed: int, chunk: int, rows: int):
    g = rngmod.stream(seed, rngmod.PATHS, chunk)
    if model.kind == GAUSSIAN:
        rho = model.rho
        z = g.standard_normal((rows, n, 2))
        second = rho * z[..., 0] + math.sqrt(1 - rho * rho) * z[..., 1]
        return _sign(z[..., 0]), _sign(second)
    u = g.random((rows, n))
    p = float(model.p)
    if model.history_free:
        return _pairs_from_uniform(u, float(model.theta), p)
    xi = np.empty((rows, n), dtype=np.int8)
    eta = np.empty((rows, n), dtype=np.int8)
    for j in range(n):
        theta = model.theta_batch(xi[:, :j], eta[:, :j])
        xi[:, j], eta[:, j] = _pairs_from_uniform(u[:, j], theta, p)
    return xi, eta


def simulate_batch(model: ModelSpec, n: int, reps: int, seed: int, threads: int = 1):
    """Simulate ``reps`` independent length-``n`` paths.

    Returns ``(xi, eta)`` int8 arrays of shape ``(reps, n)``. Path ``i`` depends
    only on ``(model, n, seed, i)``; the thread count does not change results.
    """
    if n < 1:
        raise ValueError(f"step count must be >= 1, got {n}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    validate_model(model)
    xi = np.empty((reps, n), dtype=np.int8)
    eta = np.empty((reps, n), dtype=np.int8)

    def work(item):
        c, start, stop = item
        xi[start:stop], eta[start:stop] = _simulate_chunk(model, n, seed, c, stop - start)

    items = list(rngmod.chunks(reps))
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, items))
    else:
        for item in items:
            work(item)
    return xi, eta


def iter_batches(model: ModelSpec, n: int, reps: int, seed: int) -> Iterator[tuple]:
    """Yield ``(chunk, start, xi, eta)`` blocks without holding all paths in memory."""
    validate_model(model)
    for c, start, stop in rngmod.chunks(reps):
        xi, eta = _simulate_chunk(model, n, seed, c, stop - start)
        yield c, start, xi, eta


def simulate(model: ModelSpec, n: int, seed: int) -> JointPath:
    xi, eta = simulate_batch(model, n, 1, seed)
    return JointPath.from_signs(xi[0].tolist(), eta[0].tolist())
