"""Exact enumeration of joint paths and finite-horizon identity checks.

Every check compares two exact rationals. Probabilities are carried either as
:class:`fractions.Fraction` (the streaming tree walk in :func:`enumerate_paths`)
or as integer numerators over one common denominator (:class:`PathTable`),
never as floats.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .decomposition import first_hits, signs_at
from .models import ALL_PAIRS, HALF, JointPath, ModelSpec, step_distribution, validate_model

DEFAULT_CAP = 10
_INT64_SAFE = 2**62


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedPath:
    path: JointPath
    prob: Fraction


@dataclass
class ExactReport:
    """Outcome of one exact identity family.

    ``lhs``/``rhs`` are the first failing identity when the check fails and an
    aggregate identity when it passes. ``expected`` is False for negative
    controls, whose failure is the desired outcome.
    """

    claim: str
    model: str
    lhs: Fraction
    rhs: Fraction
    passed: bool
    checked: int = 0
    witness: dict | None = None
    failures: list = field(default_factory=list)
    expected: bool = True
    params: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.passed == self.expected

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return {"num": v.numerator, "den": v.denominator}
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            return v

        return {
            "type": "exact",
            "claim": self.claim,
            "model": self.model,
            "params": enc(self.params),
            "lhs": enc(self.lhs),
            "rhs": enc(self.rhs),
            "pass": self.passed,
            "expected": self.expected,
            "ok": self.ok,
            "checked": self.checked,
            "witness": enc(self.witness),
            "failures": enc(self.failures),
        }


def _require(model: ModelSpec, N: int, cap: int, half: bool = False) -> None:
    if not model.exact:
        raise OracleError(f"model {model.label()} is not exact-rational; the oracle needs exact theta")
    if N < 1:
        raise OracleError(f"horizon must be >= 1, got {N}")
    if N > cap:
        raise OracleError(
            f"horizon {N} exceeds cap {cap}: {4**N:,} paths (about {4**N / 4**DEFAULT_CAP:.0f}x "
            f"the default-cap cost); raise the cap explicitly if intended"
        )
    if half and model.p != HALF:
        raise OracleError(f"this check needs p = 1/2, model has p = {model.p}")
    validate_model(model)


def enumerate_paths(model: ModelSpec, N: int, cap: int = DEFAULT_CAP) -> Iterator[WeightedPath]:
    """Depth-first walk of the 4-ary path tree carrying the running weight.

    Yields all 4**N paths, including those of zero mass.
    """
    _require(model, N, cap)

    def walk(history, weight):
        if len(history) == N:
            yield WeightedPath(JointPath(history), weight)
            return
        dist = step_distribution(model, history)
        for pair in ALL_PAIRS:
            yield from walk(history + (pair,), weight * dist[pair])

    yield from walk((), Fraction(1))


class PathTable:
    """All 4**N paths of a model as arrays, with exact integer weights.

    Row ``r`` has probability ``num[r] / den``. Rows are ordered by the
    base-4 code of the path with steps in (++, +-, -+, --) order.
    """

    def __init__(self, model: ModelSpec, N: int, cap: int = DEFAULT_CAP):
        _require(model, N, cap)
        self.model = model
        self.N = N
        histories = [()]
        num = np.ones(1, dtype=np.int64)
        den = 1
        for level in range(N):
            thetas = [model.theta_at(h) for h in histories]
            dists = {}
            for theta, h in zip(thetas, histories):
                if theta not in dists:
                    dists[theta] = step_distribution(model, h)
            lcm = math.lcm(*(d[pair].denominator for d in dists.values() for pair in ALL_PAIRS))
            rows = {t: [int(d[pair] * lcm) for pair in ALL_PAIRS] for t, d in dists.items()}
            mult = [v for theta in thetas for v in rows[theta]]
            den *= lcm
            if num.dtype != object and den >= _INT64_SAFE:
                num = num.astype(object)
            mult_arr = np.array(mult, dtype=num.dtype)
            num = np.repeat(num, 4) * mult_arr
            if level < N - 1:
                histories = [h + (pair,) for h in histories for pair in ALL_PAIRS]
        self.num = num
        self.den = den
        codes = np.arange(4**N, dtype=np.int64)
        digits = np.stack([(codes // 4 ** (N - 1 - j)) % 4 for j in range(N)], axis=1)
        self.xi = np.where(digits < 2, 1, -1).astype(np.int8)
        self.eta = np.where(digits % 2 == 0, 1, -1).astype(np.int8)
        self.Q = self.xi == self.eta
        self.T = np.cumsum(self.Q, axis=1, dtype=np.int32)
        self.alpha = first_hits(self.Q, N)
        self.beta = first_hits(~self.Q, N)
        self.alpha_sign = signs_at(self.xi, self.alpha)
        self.beta_sign = signs_at(self.xi, self.beta)

    def __len__(self):
        return len(self.num)

    def total(self) -> Fraction:
        return Fraction(int(self.num.sum()), self.den)

    def mass(self, mask: np.ndarray) -> int:
        """Integer numerator of P(mask) over :attr:`den`."""
        return int(self.num[mask].sum())

    def prob(self, mask: np.ndarray) -> Fraction:
        return Fraction(self.mass(mask), self.den)

    def group_mass(self, keys: np.ndarray, mask: np.ndarray, size: int) -> list:
        out = np.zeros(size, dtype=self.num.dtype)
        if out.dtype == object:
            out[:] = 0
        np.add.at(out, keys[mask], self.num[mask])
        return [int(v) for v in out]


_tables: dict = {}


def path_table(model: ModelSpec, N: int, cap: int = DEFAULT_CAP) -> PathTable:
    """Cached :class:`PathTable` for ``(model, N)``."""
    key = (model.label(), N)
    table = _tables.get(key)
    if table is None or table.model != model:
        table = PathTable(model, N, cap)
        if len(_tables) > 16:
            _tables.clear()
        _tables[key] = table
    return table


def exact_event_prob(model: ModelSpec, N: int, predicate: Callable, cap: int = DEFAULT_CAP) -> Fraction:
    """P(predicate) at horizon N.

    ``predicate`` is either a callable on :class:`JointPath` or an object with
    a vectorised ``mask(xi, eta)`` method (see :mod:`corrwalk.events`).
    """
    if hasattr(predicate, "mask"):
        table = path_table(model, N, cap)
        return table.prob(np.asarray(predicate.mask(table.xi, table.eta), dtype=bool))
    total = Fraction(0)
    for wp in enumerate_paths(model, N, cap):
        if wp.prob and predicate(wp.path):
            total += wp.prob
    return total


# -- identity checks --------------------------------------------------------


def _assignments(K: int):
    return list(itertools.product((1, -1), repeat=K))


def _sign_code(columns: Sequence[np.ndarray]) -> np.ndarray:
    """Pack sign columns into an integer code; +1 -> bit 1, first column most significant."""
    code = np.zeros(columns[0].shape[0] if columns else 0, dtype=np.int64)
    for col in columns:
        code = code * 2 + (col == 1)
    return code


def _code_of(signs: Sequence[int]) -> int:
    code = 0
    for s in signs:
        code = code * 2 + (s == 1)
    return code


def _fail(failures: list, limit: int, item: dict) -> None:
    if len(failures) < limit:
        failures.append(item)


def check_normalization(model: ModelSpec, N: int, cap: int = DEFAULT_CAP) -> ExactReport:
    table = path_table(model, N, cap)
    total = table.total()
    return ExactReport("total-mass", model.label(), total, Fraction(1), total == 1, 1, params={"N": N})


def check_sign_symmetry(
    model: ModelSpec, N: int, n: int, side: str = "both", cap: int = DEFAULT_CAP, max_failures: int = 64
) -> ExactReport:
    """P(xi at the n-th common (counter) move = +1, move at step h) equals the -1 mass, for every h <= N."""
    _require(model, N, cap, half=True)
    if not 1 <= n <= N:
        raise OracleError(f"index n={n} outside 1..{N}")
    table = path_table(model, N, cap)
    sides = {"alpha": (table.alpha, table.alpha_sign), "beta": (table.beta, table.beta_sign)}
    chosen = ["alpha", "beta"] if side == "both" else [side]
    failures, checked = [], 0
    agg = {}
    for name in chosen:
        pos, sgn = sides[name][0][:, n - 1], sides[name][1][:, n - 1]
        plus = table.group_mass(pos, sgn == 1, N + 1)
        minus = table.group_mass(pos, sgn == -1, N + 1)
        for h in range(n, N + 1):
            checked += 1
            if plus[h] != minus[h]:
                _fail(failures, max_failures, {
                    "side": name, "h": h,
                    "lhs": Fraction(plus[h], table.den), "rhs": Fraction(minus[h], table.den),
                })
        agg[name] = (Fraction(sum(plus[1:]), table.den), Fraction(sum(plus[1:]) + sum(minus[1:]), table.den) / 2)
    lhs, rhs = agg[chosen[0]]
    if failures:
        lhs, rhs = failures[0]["lhs"], failures[0]["rhs"]
    return ExactReport(
        "sign-symmetry", model.label(), lhs, rhs, not failures, checked,
        witness=failures[0] if failures else None, failures=failures,
        params={"N": N, "n": n, "side": side},
    )


def check_halving_recursion(
    model: ModelSpec,
    N: int,
    n_idx: Sequence[int],
    m_idx: Sequence[int],
    signs: tuple | None = None,
    cap: int = DEFAULT_CAP,
    max_failures: int = 64,
) -> ExactReport:
    """Halving identities at the latest constrained hitting time.

    With n_1 < ... < n_k and m_1 < ... < m_l, on the event that the n_k-th
    common move happens by N and after the m_l-th counter move, fixing the
    sign of that last common move halves the probability; symmetrically for
    the last counter move when it comes after the n_k-th common move.
    ``signs`` restricts to one assignment ``(x_1..x_k, y_1..y_l)``.
    """
    _require(model, N, cap, half=True)
    n_idx, m_idx = tuple(n_idx), tuple(m_idx)
    k, l = len(n_idx), len(m_idx)
    if k + l == 0:
        raise OracleError("need at least one index")
    if list(n_idx) != sorted(set(n_idx)) or list(m_idx) != sorted(set(m_idx)):
        raise OracleError("indices must be strictly increasing")
    if any(not 1 <= i <= N for i in n_idx + m_idx):
        raise OracleError(f"indices must lie in 1..{N}")
    table = path_table(model, N, cap)
    xcols = [table.alpha_sign[:, i - 1] for i in n_idx]
    ycols = [table.beta_sign[:, j - 1] for j in m_idx]
    assignments = [signs] if signs is not None else _assignments(k + l)
    failures, checked = [], 0
    agg = None

    def run(last_pos, other_pos, full_cols, red_cols, drop, label):
        nonlocal checked, agg
        cond = last_pos > 0
        if other_pos is not None:
            cond = cond & (other_pos > 0) & (other_pos < last_pos)
        full = table.group_mass(_sign_code(full_cols), cond, 2 ** len(full_cols))
        red = table.group_mass(_sign_code(red_cols), cond, 2 ** len(red_cols)) if red_cols else [table.mass(cond)]
        for a in assignments:
            reduced = a[:drop] + a[drop + 1:]
            f, r = full[_code_of(a)], red[_code_of(reduced)] if red_cols else red[0]
            checked += 1
            if 2 * f != r:
                _fail(failures, max_failures, {
                    "identity": label, "signs": list(a),
                    "lhs": Fraction(f, table.den), "rhs": Fraction(r, 2 * table.den),
                })
            elif agg is None:
                agg = (Fraction(f, table.den), Fraction(r, 2 * table.den))

    if k:
        run(table.alpha[:, n_idx[-1] - 1], table.beta[:, m_idx[-1] - 1] if l else None,
            xcols + ycols, xcols[:-1] + ycols, k - 1, "common-last")
    if l:
        run(table.beta[:, m_idx[-1] - 1], table.alpha[:, n_idx[-1] - 1] if k else None,
            xcols + ycols, xcols + ycols[:-1], k + l - 1, "counter-last")
    lhs, rhs = agg if agg else (Fraction(0), Fraction(0))
    if failures:
        lhs, rhs = failures[0]["lhs"], failures[0]["rhs"]
    return ExactReport(
        "halving-recursion", model.label(), lhs, rhs, not failures, checked,
        witness=failures[0] if failures else None, failures=failures,
        params={"N": N, "n": list(n_idx), "m": list(m_idx)},
    )


def check_c1_factorization(
    model: ModelSpec,
    N: int,
    n_idx: Sequence[int],
    m_idx: Sequence[int],
    cap: int = DEFAULT_CAP,
    expected: bool | None = None,
    max_failures: int = 256,
) -> ExactReport:
    """Signs at the requested hitting times factor against the Q-pattern.

    For every prefix length L <= N and every pattern q of Q_1..Q_L under which
    all requested hitting times fall within 1..L, checks
    P(signs, Q_{1:L} = q) * 2**(k+l) == P(Q_{1:L} = q) for all sign
    assignments. The witness is the first failure in (L, q, signs) order.
    ``expected`` defaults to False for sign-adversarial models.
    """
    _require(model, N, cap, half=True)
    n_idx, m_idx = tuple(n_idx), tuple(m_idx)
    k, l = len(n_idx), len(m_idx)
    K = k + l
    if K == 0:
        raise OracleError("need at least one index")
    if expected is None:
        expected = model.kind != "sign-adversarial-theta"
    table = path_table(model, N, cap)
    cols = [table.alpha_sign[:, i - 1] for i in n_idx] + [table.beta_sign[:, j - 1] for j in m_idx]
    scode = _sign_code(cols)
    assignments = _assignments(K)
    need_common = max(n_idx, default=0)
    need_counter = max(m_idx, default=0)
    failures, checked = [], 0
    agg_lhs = agg_rhs = 0
    pattern = np.zeros(len(table), dtype=np.int64)
    everything = np.ones(len(table), dtype=bool)
    for L in range(1, N + 1):
        pattern = pattern * 2 + table.Q[:, L - 1]
        pmass = table.group_mass(pattern, everything, 2**L)
        joint = table.group_mass(pattern * 2**K + scode, everything, 2 ** (L + K))
        for q in range(2**L):
            ones = bin(q).count("1")
            if ones < need_common or L - ones < need_counter:
                continue
            bits = tuple((q >> (L - 1 - i)) & 1 for i in range(L))
            for a in assignments:
                lhs = joint[q * 2**K + _code_of(a)] * 2**K
                checked += 1
                if lhs != pmass[q]:
                    _fail(failures, max_failures, {
                        "pattern": list(bits), "signs": list(a),
                        "lhs": Fraction(joint[q * 2**K + _code_of(a)], table.den),
                        "rhs": Fraction(pmass[q], table.den * 2**K),
                    })
                elif L == N:
                    agg_lhs += joint[q * 2**K + _code_of(a)]
                    agg_rhs += pmass[q]
    if failures:
        lhs, rhs = failures[0]["lhs"], failures[0]["rhs"]
    else:
        lhs, rhs = Fraction(agg_lhs, table.den), Fraction(agg_rhs, table.den * 2**K)
    return ExactReport(
        "c1-factorization", model.label(), lhs, rhs, not failures, checked,
        witness=failures[0] if failures else None, failures=failures, expected=expected,
        params={"N": N, "n": list(n_idx), "m": list(m_idx)},
    )


def check_biased_formula(
    model: ModelSpec, N: int, n: int, m: int | None = None, cap: int = DEFAULT_CAP, max_failures: int = 64
) -> ExactReport:
    """Drift of the common-move signs and fairness of the counter-move signs.

    Per step h: P(+1 at the n-th common move, at h) - P(-1, at h)
    = (2p - 1) P(T_{h-1} = n - 1); aggregated,
    P(+1, alpha_n <= N) = (P(alpha_n <= N) + (2p - 1) sum_h P(T_{h-1} = n - 1)) / 2.
    The m-th counter move has equal +-1 mass at every h.
    """
    _require(model, N, cap)
    m = n if m is None else m
    if not (1 <= n <= N and 1 <= m <= N):
        raise OracleError(f"indices must lie in 1..{N}")
    table = path_table(model, N, cap)
    drift = 2 * model.p - 1
    pos, sgn = table.alpha[:, n - 1], table.alpha_sign[:, n - 1]
    plus = table.group_mass(pos, sgn == 1, N + 1)
    minus = table.group_mass(pos, sgn == -1, N + 1)
    Tprev = np.concatenate([np.zeros((len(table), 1), dtype=np.int32), table.T[:, :-1]], axis=1)
    failures, checked = [], 0
    clock_sum = Fraction(0)
    for h in range(n, N + 1):
        at_level = Fraction(table.mass(Tprev[:, h - 1] == n - 1), table.den)
        clock_sum += at_level
        lhs = Fraction(plus[h] - minus[h], table.den)
        rhs = drift * at_level
        checked += 1
        if lhs != rhs:
            _fail(failures, max_failures, {"side": "alpha", "h": h, "lhs": lhs, "rhs": rhs})
    bpos, bsgn = table.beta[:, m - 1], table.beta_sign[:, m - 1]
    bplus = table.group_mass(bpos, bsgn == 1, N + 1)
    bminus = table.group_mass(bpos, bsgn == -1, N + 1)
    for h in range(m, N + 1):
        checked += 1
        if bplus[h] != bminus[h]:
            _fail(failures, max_failures, {
                "side": "beta", "h": h,
                "lhs": Fraction(bplus[h], table.den), "rhs": Fraction(bminus[h], table.den),
            })
    reached = Fraction(sum(plus[1:]) + sum(minus[1:]), table.den)
    agg_lhs = Fraction(sum(plus[1:]), table.den)
    agg_rhs = (reached + drift * clock_sum) / 2
    if agg_lhs != agg_rhs:
        _fail(failures, max_failures, {"side": "alpha-aggregate", "lhs": agg_lhs, "rhs": agg_rhs})
    lhs, rhs = (failures[0]["lhs"], failures[0]["rhs"]) if failures else (agg_lhs, agg_rhs)
    return ExactReport(
        "biased-formula", model.label(), lhs, rhs, not failures, checked + 1,
        witness=failures[0] if failures else None, failures=failures,
        params={"N": N, "n": n, "m": m, "p": model.p},
    )


# -- suites -----------------------------------------------------------------

HALVING_SHAPES = ((1, 0), (0, 1), (1, 1), (2, 1))


def index_tuples(N: int, k: int, l: int):
    for ns in itertools.combinations(range(1, N + 1), k):
        for ms in itertools.combinations(range(1, N + 1), l):
            yield ns, ms


def c1_index_family(N: int) -> list:
    fam = [((n,), ()) for n in range(1, min(N, 3) + 1)]
    fam += [((), (m,)) for m in range(1, min(N, 3) + 1)]
    fam += [((1,), (1,))]
    if N >= 2:
        fam += [((1, 2), (1,)), ((1,), (1, 2))]
    return fam


def run_suite(model: ModelSpec, N: int, checks: Sequence[str] = ("all",), cap: int = DEFAULT_CAP) -> list:
    """Run the oracle checks that apply to ``model`` at horizon N."""
    wanted = set(checks)
    every = "all" in wanted
    reports = [check_normalization(model, N, cap)]
    fair = model.p == HALF
    if fair and (every or "symmetry" in wanted):
        reports += [check_sign_symmetry(model, N, n, cap=cap) for n in range(1, N + 1)]
    if fair and (every or "halving" in wanted):
        for k, l in HALVING_SHAPES:
            for ns, ms in index_tuples(N, k, l):
                reports.append(check_halving_recursion(model, N, ns, ms, cap=cap))
    if fair and (every or "c1" in wanted):
        reports += [check_c1_factorization(model, N, ns, ms, cap=cap) for ns, ms in c1_index_family(N)]
    if every or "biased" in wanted:
        reports += [check_biased_formula(model, N, n, cap=cap) for n in range(1, N + 1)]
    return reports
