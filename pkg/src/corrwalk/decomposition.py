"""Common/counter decomposition of a joint path.

For a path of sign pairs (xi_n, eta_n):

* ``Q_n = 1`` if the step is a common move (xi_n == eta_n), else 0;
* ``T_n`` counts common moves up to n and ``S_n = n - T_n`` counter moves;
* ``alpha_n`` (``beta_n``) is the step at which the n-th common (counter)
  move happens, :data:`UNREACHED` if it does not happen within the horizon;
* ``X_n`` (``Y_n``) sums xi over the first n common (counter) moves.

Then ``B_n = X_{T_n} + Y_{S_n}`` and ``W_n = X_{T_n} - Y_{S_n}``.

All externally visible sequences are 1-based: element ``i`` of a tuple holds
the value at index ``i + 1``.
"""

from __future__ import annotations

import csv
import io
from itertools import accumulate
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import JointPath, SignPair


class _Unreached:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNREACHED"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Unreached, ())


UNREACHED = _Unreached()


def is_reached(value) -> bool:
    return value is not UNREACHED


@dataclass(frozen=True)
class Counters:
    T: tuple
    S: tuple


@dataclass(frozen=True)
class HittingTimes:
    alpha: tuple
    beta: tuple

    def reached_alpha(self) -> tuple:
        return tuple(a for a in self.alpha if a is not UNREACHED)

    def reached_beta(self) -> tuple:
        return tuple(b for b in self.beta if b is not UNREACHED)


@dataclass(frozen=True)
class Decomposition:
    Q: tuple
    counters: Counters
    hits: HittingTimes
    X: tuple
    Y: tuple
    completion_used: bool = False

    @property
    def T(self) -> tuple:
        return self.counters.T

    @property
    def S(self) -> tuple:
        return self.counters.S

    @property
    def alpha(self) -> tuple:
        return self.hits.alpha

    @property
    def beta(self) -> tuple:
        return self.hits.beta

    def __len__(self):
        return len(self.Q)

    def to_json(self) -> dict:
        def enc(seq):
            return [None if v is UNREACHED else v for v in seq]

        return {
            "N": len(self.Q),
            "Q": list(self.Q),
            "T": list(self.T),
            "S": list(self.S),
            "alpha": enc(self.alpha),
            "beta": enc(self.beta),
            "X": list(self.X),
            "Y": list(self.Y),
            "completion_used": self.completion_used,
        }


def classify_step(pair: SignPair) -> int:
    return 1 if pair.xi == pair.eta else 0


def run_counters(Q: Sequence[int]) -> Counters:
    for n, q in enumerate(Q, start=1):
        if q != 0 and q != 1:
            raise ValueError(f"Q_{n} must be 0 or 1, got {q!r}")
    T = tuple(accumulate(Q))
    return Counters(T, tuple(n - t for n, t in enumerate(T, start=1)))


def _first_hits(counts: Sequence[int]) -> tuple:
    hits = [UNREACHED] * len(counts)
    prev = 0
    for k, c in enumerate(counts, start=1):
        if c != prev:
            hits[c - 1] = k
            prev = c
    return tuple(hits)


def hitting_times(counters: Counters) -> HittingTimes:
    """alpha_n = min{k : T_k = n}, beta_n = min{k : S_k = n}, for n = 1..N."""
    return HittingTimes(_first_hits(counters.T), _first_hits(counters.S))


def _completion_signs(rng, count: int) -> list:
    return [1 if u < 0.5 else -1 for u in rng.random(count)]


def extract_walks(
    path: JointPath,
    hits: HittingTimes,
    completion=None,
    length: tuple | None = None,
):
    """Return ``(X, Y)`` as tuples of partial sums.

    Without ``completion`` the walks stop at the last reached hitting time.
    With ``completion = (zeta_rng, psi_rng)`` the walks run to ``length =
    (k, l)`` entries (default: the horizon for both), unreached increments
    being replaced by fair signs: the n-th X increment by zeta_n, the m-th
    Y increment by psi_m.
    """
    N = len(path)
    if len(hits.alpha) != N or len(hits.beta) != N:
        raise ValueError(
            f"hitting times cover horizon {len(hits.alpha)}/{len(hits.beta)}, path has {N} steps"
        )
    xi = path.xi
    if completion is None:
        if length is not None:
            raise ValueError("a requested length needs completion streams")
        xs = [xi[a - 1] for a in hits.alpha if a is not UNREACHED]
        ys = [xi[b - 1] for b in hits.beta if b is not UNREACHED]
    else:
        k, l = length if length is not None else (N, N)
        zeta = _completion_signs(completion[0], k)
        psi = _completion_signs(completion[1], l)
        xs = [xi[hits.alpha[i] - 1] if i < N and hits.alpha[i] is not UNREACHED else zeta[i] for i in range(k)]
        ys = [xi[hits.beta[i] - 1] if i < N and hits.beta[i] is not UNREACHED else psi[i] for i in range(l)]
    return tuple(accumulate(xs)), tuple(accumulate(ys))


def decompose(path: JointPath, completion=None, length: tuple | None = None) -> Decomposition:
    Q = tuple(1 if a == b else 0 for a, b in zip(path.xi, path.eta))
    counters = run_counters(Q)
    hits = hitting_times(counters)
    X, Y = extract_walks(path, hits, completion, length)
    t_end = counters.T[-1] if Q else 0
    used = completion is not None and (len(X) > t_end or len(Y) > len(Q) - t_end)
    return Decomposition(Q, counters, hits, X, Y, used)


def reconstruct(X: Sequence[int], Y: Sequence[int], T: Sequence[int]) -> tuple:
    """Rebuild ``(B, W)`` from the component walks and the clock T (X_0 = Y_0 = 0)."""
    B, W = [], []
    prev = 0
    for n, t in enumerate(T, start=1):
        if t - prev not in (0, 1):
            raise ValueError(f"T must be nondecreasing with unit increments; T_{n} - T_{n-1} = {t - prev}")
        prev = t
        s = n - t
        if t > len(X):
            raise IndexError(f"X_{t} is needed at n={n} but X has only {len(X)} entries")
        if s > len(Y):
            raise IndexError(f"Y_{s} is needed at n={n} but Y has only {len(Y)} entries")
        x = X[t - 1] if t else 0
        y = Y[s - 1] if s else 0
        B.append(x + y)
        W.append(x - y)
    return tuple(B), tuple(W)


# -- Table-1 style output ---------------------------------------------------

TABLE_COLUMNS = ("n", "B", "W", "T", "S", "alpha", "beta", "X", "Y")


def table_rows(path: JointPath, dec: Decomposition) -> list:
    rows = []
    for i in range(len(path)):
        def at(seq):
            if i >= len(seq) or seq[i] is UNREACHED:
                return ""
            return seq[i]

        rows.append(
            {
                "n": i + 1,
                "B": path.B[i],
                "W": path.W[i],
                "T": dec.T[i],
                "S": dec.S[i],
                "alpha": at(dec.alpha),
                "beta": at(dec.beta),
                "X": at(dec.X),
                "Y": at(dec.Y),
            }
        )
    return rows


def to_csv(path: JointPath, dec: Decomposition) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(table_rows(path, dec))
    return buf.getvalue()


# Built-in worked example (10 steps, ends with three common moves).
TABLE1_B = (1, 0, -1, -2, -1, 0, -1, 0, 1, 2)
TABLE1_W = (-1, 0, 1, 0, -1, -2, -1, -2, -1, 0)


def table1_path() -> JointPath:
    return JointPath.from_walks(TABLE1_B, TABLE1_W)


# -- vectorised helpers -----------------------------------------------------


def first_hits(flags: np.ndarray, count: int) -> np.ndarray:
    """1-based position of the n-th True in each row for n = 1..count; 0 if absent.

    ``flags`` has shape (rows, N); the result has shape (rows, count).
    """
    cum = np.cumsum(flags, axis=1, dtype=np.int32)
    total = cum[:, -1] if cum.shape[1] else np.zeros(cum.shape[0], dtype=np.int32)
    out = np.zeros((flags.shape[0], count), dtype=np.int32)
    for n in range(1, count + 1):
        pos = np.argmax(cum >= n, axis=1) + 1
        out[:, n - 1] = np.where(total >= n, pos, 0)
    return out


def signs_at(xi: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """xi at 1-based ``positions`` (0 where the position is 0)."""
    rows = np.arange(xi.shape[0])[:, None]
    vals = xi[rows, np.maximum(positions - 1, 0)]
    return np.where(positions > 0, vals, 0).astype(np.int8)


def decompose_batch(xi: np.ndarray, eta: np.ndarray):
    """Vectorised decomposition without completion.

    Returns ``(T, X, Y, nx, ny)``: ``T`` of shape (rows, N); ``X``/``Y`` of
    shape (rows, N) padded with their last value past ``nx``/``ny`` defined
    entries.
    """
    Q = xi == eta
    T = np.cumsum(Q, axis=1, dtype=np.int32)
    rows, N = xi.shape
    X = np.zeros((rows, N), dtype=np.int32)
    Y = np.zeros((rows, N), dtype=np.int32)
    # stable sort puts common moves first, in time order
    order_x = np.argsort(~Q, axis=1, kind="stable")
    order_y = np.argsort(Q, axis=1, kind="stable")
    r = np.arange(rows)[:, None]
    nx = T[:, -1]
    ny = N - nx
    cols = np.arange(N)[None, :]
    X = np.cumsum(np.where(cols < nx[:, None], xi[r, order_x], 0), axis=1, dtype=np.int32)
    Y = np.cumsum(np.where(cols < ny[:, None], xi[r, order_y], 0), axis=1, dtype=np.int32)
    return T, X, Y, nx, ny


def reconstruct_batch(X: np.ndarray, Y: np.ndarray, T: np.ndarray):
    rows, N = T.shape
    S = np.arange(1, N + 1)[None, :] - T
    r = np.arange(rows)[:, None]
    x = np.where(T > 0, X[r, np.maximum(T - 1, 0)], 0)
    y = np.where(S > 0, Y[r, np.maximum(S - 1, 0)], 0)
    return x + y, x - y
