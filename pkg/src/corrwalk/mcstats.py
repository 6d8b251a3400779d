"""Monte Carlo estimates and hypothesis tests for the decomposition.

Replications are simulated in fixed-size chunks (see :mod:`corrwalk.rng`);
each chunk owns its path stream and its two completion streams, so counts
do not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng as rngmod
from .decomposition import first_hits, signs_at
from .events import Event, random_event
from .models import HALF, ModelSpec, _simulate_chunk, biased, gaussian, gaussian_theta, validate_model
from .oracle import exact_event_prob

SIGNIFICANCE = 0.001


class UndersampledError(ValueError):
    """The sample is too small for the requested asymptotic test."""


@dataclass
class TestReport:
    name: str
    sample_size: int
    statistic: float
    p_value: float
    passed: bool
    df: int | None = None
    estimate: float | None = None
    stderr: float | None = None
    target: float | None = None
    significance: float = SIGNIFICANCE
    expected: bool = True
    extra: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def ok(self) -> bool:
        return self.passed == self.expected

    def to_json(self) -> dict:
        return {
            "type": "test",
            "name": self.name,
            "sample_size": self.sample_size,
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "target": self.target,
            "significance": self.significance,
            "pass": self.passed,
            "expected": self.expected,
            "ok": self.ok,
            "extra": self.extra,
        }


@dataclass
class BlockCounts:
    """Counts of the 2**(k+l) sign vectors (X increments 1..k, Y increments 1..l).

    Cell index packs the signs with +1 as bit 1, the first X increment being
    the most significant bit and the last Y increment the least.
    ``reached`` counts only replications whose k + l hitting times all fell
    within the horizon.
    """

    k: int
    l: int
    horizon: int
    counts: np.ndarray
    reached: np.ndarray

    @property
    def cells(self) -> int:
        return 2 ** (self.k + self.l)

    @property
    def reps(self) -> int:
        return int(self.counts.sum())

    @property
    def completed(self) -> int:
        return self.reps - int(self.reached.sum())

    def cell_signs(self, cell: int) -> tuple:
        K = self.k + self.l
        return tuple(1 if (cell >> (K - 1 - i)) & 1 else -1 for i in range(K))


def _map_chunks(fn, reps: int, threads: int):
    items = list(rngmod.chunks(reps))
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _fair_signs(g: np.random.Generator, rows: int, count: int) -> np.ndarray:
    return np.where(g.random((rows, count)) < 0.5, 1, -1).astype(np.int8)


def completed_block(xi, eta, k, l, seed, chunk, completion_seed=None):
    """Signs of the first k common and l counter moves, completed with fair draws.

    Returns ``(signs, all_reached)`` with ``signs`` of shape (rows, k + l).
    """
    cseed = seed if completion_seed is None else completion_seed
    rows = xi.shape[0]
    Q = xi == eta
    cols, reached = [], np.ones(rows, dtype=bool)
    for count, flags, purpose in ((k, Q, rngmod.ZETA), (l, ~Q, rngmod.PSI)):
        if count == 0:
            continue
        pos = first_hits(flags, count)
        fill = _fair_signs(rngmod.stream(cseed, purpose, chunk), rows, count)
        cols.append(np.where(pos > 0, signs_at(xi, pos), fill))
        reached &= pos[:, -1] > 0
    signs = np.concatenate(cols, axis=1) if cols else np.zeros((rows, 0), dtype=np.int8)
    return signs, reached


def _codes(signs: np.ndarray) -> np.ndarray:
    code = np.zeros(signs.shape[0], dtype=np.int64)
    for j in range(signs.shape[1]):
        code = code * 2 + (signs[:, j] == 1)
    return code


def mc_block_pmf(
    model: ModelSpec,
    k: int,
    l: int,
    horizon: int,
    reps: int,
    seed: int,
    completion_seed: int | None = None,
    threads: int = 1,
) -> BlockCounts:
    validate_model(model)
    if model.p != HALF:
        raise ValueError(f"block pmf test needs p = 1/2, model has p = {model.p}")
    if k + l == 0:
        raise ValueError("need k + l >= 1")
    cells = 2 ** (k + l)

    def work(item):
        c, start, stop = item
        xi, eta = _simulate_chunk(model, horizon, seed, c, stop - start)
        signs, reached = completed_block(xi, eta, k, l, seed, c, completion_seed)
        code = _codes(signs)
        return np.bincount(code, minlength=cells), np.bincount(code[reached], minlength=cells)

    parts = _map_chunks(work, reps, threads)
    counts = sum(p[0] for p in parts)
    reached = sum(p[1] for p in parts)
    return BlockCounts(k, l, horizon, counts.astype(np.int64), reached.astype(np.int64))


def chi_square_uniform(counts, significance: float = SIGNIFICANCE, name: str = "block-uniformity") -> TestReport:
    """Pearson chi-square test of the cell counts against the uniform law."""
    obs = np.asarray(counts.counts if isinstance(counts, BlockCounts) else counts, dtype=float)
    cells = obs.size
    total = obs.sum()
    if cells < 2:
        raise ValueError("need at least two cells")
    if total / cells < 5:
        raise UndersampledError(
            f"expected count per cell is {total / cells:.2f} < 5; need at least {5 * cells} replications"
        )
    stat, pval = stats.chisquare(obs)
    pval = float(min(max(pval, 0.0), 1.0))
    return TestReport(
        name, int(total), float(stat), pval, pval > significance, df=cells - 1,
        significance=significance,
        extra={"max_abs_z": float(np.max(np.abs(obs - total / cells) / math.sqrt(total / cells * (1 - 1 / cells))))},
    )


def null_pvalue_uniformity(runs: int = 1000, cells: int = 64, reps: int = 10_000, seed: int = 0) -> TestReport:
    """Self-test of the chi-square harness: p-values under a uniform null should be uniform."""
    g = rngmod.stream(seed, rngmod.AUX)
    pvals = np.array([
        chi_square_uniform(g.multinomial(reps, np.full(cells, 1 / cells))).p_value for _ in range(runs)
    ])
    ks = stats.kstest(pvals, "uniform")
    return TestReport(
        "harness-null-pvalues", runs, float(ks.statistic), float(ks.pvalue), bool(ks.statistic < 0.05),
        extra={"cells": cells, "reps_per_run": reps},
    )


def _binomial_report(name, hits, n, target, z_crit, mode="two-sided", expected=True, extra=None):
    est = hits / n
    se = math.sqrt(target * (1 - target) / n) if 0 < target < 1 else 0.0
    if se == 0:
        z = 0.0 if est == target else math.copysign(math.inf, est - target)
    else:
        z = (est - target) / se
    if mode == "greater":
        pval, passed = float(stats.norm.sf(z)), z > z_crit
    elif mode == "less":
        pval, passed = float(stats.norm.cdf(z)), z < -z_crit
    else:
        pval, passed = float(2 * stats.norm.sf(abs(z))), abs(z) <= z_crit
    return TestReport(
        name, int(n), float(z), pval, bool(passed), estimate=float(est), stderr=float(se),
        target=float(target), expected=expected, extra={"z_crit": z_crit, "mode": mode, **(extra or {})},
    )


def estimate_delta_T(rho: float, reps: int, seed: int, z_crit: float = 3.0, threads: int = 1) -> TestReport:
    """Frequency of common moves under the Gaussian driver vs 1/2 + arcsin(rho)/pi."""
    target = 2 * gaussian_theta(rho)
    model = gaussian(rho)

    def work(item):
        c, start, stop = item
        xi, eta = _simulate_chunk(model, 1, seed, c, stop - start)
        return int((xi == eta).sum())

    common = sum(_map_chunks(work, reps, threads))
    return _binomial_report("delta-T", common, reps, target, z_crit, extra={"rho": rho})


def independence_test_xyt(
    model: ModelSpec,
    k: int,
    l: int,
    pattern_length: int,
    reps: int,
    seed: int,
    horizon: int = 64,
    significance: float = SIGNIFICANCE,
    expected: bool | None = None,
    threads: int = 1,
) -> TestReport:
    """G-test of independence between the completed sign block and Q_1..Q_L."""
    validate_model(model)
    if model.p != HALF:
        raise ValueError(f"independence test needs p = 1/2, model has p = {model.p}")
    if pattern_length > horizon:
        raise ValueError("pattern length cannot exceed the horizon")
    if expected is None:
        expected = model.kind != "sign-adversarial-theta"
    cells, patterns = 2 ** (k + l), 2**pattern_length

    def work(item):
        c, start, stop = item
        xi, eta = _simulate_chunk(model, horizon, seed, c, stop - start)
        signs, _ = completed_block(xi, eta, k, l, seed, c)
        pat = np.zeros(xi.shape[0], dtype=np.int64)
        for j in range(pattern_length):
            pat = pat * 2 + (xi[:, j] == eta[:, j])
        return np.bincount(_codes(signs) * patterns + pat, minlength=cells * patterns)

    table = sum(_map_chunks(work, reps, threads)).reshape(cells, patterns)
    empty_cols = [q for q in range(patterns) if table[:, q].sum() == 0]
    if empty_cols:
        raise UndersampledError(
            f"{len(empty_cols)} of {patterns} Q-patterns never occurred (e.g. pattern "
            f"{format(empty_cols[0], f'0{pattern_length}b')}); the contingency table is degenerate"
        )
    expected_counts = stats.contingency.expected_freq(table)
    if expected_counts.min() < 5:
        raise UndersampledError(
            f"smallest expected cell count {expected_counts.min():.2f} < 5; increase reps"
        )
    g, pval, dof, _ = stats.chi2_contingency(table, correction=False, lambda_="log-likelihood")
    return TestReport(
        "xyt-independence", int(table.sum()), float(g), float(pval), bool(pval > significance),
        df=int(dof), significance=significance, expected=expected,
        extra={"model": model.label(), "k": k, "l": l, "pattern_length": pattern_length},
    )


def biased_walk_tests(
    p, theta, horizon: int, reps: int, seed: int, index: int = 1, z_crit: float = 3.0, threads: int = 1
) -> tuple:
    """Counter-move fairness and common-move drift for a biased model.

    Returns ``(y_report, x_report)``. The Y report checks P(dY_index = +1)
    against 1/2 two-sided; the X report checks P(dX_index = +1) against p,
    one-sided in the direction of the bias (two-sided when p = 1/2).
    """
    model = validate_model(biased(p, theta))
    pf = float(model.p)

    def work(item):
        c, start, stop = item
        xi, eta = _simulate_chunk(model, horizon, seed, c, stop - start)
        signs, _ = completed_block(xi, eta, index, index, seed, c)
        return int((signs[:, index - 1] == 1).sum()), int((signs[:, -1] == 1).sum())

    parts = _map_chunks(work, reps, threads)
    x_up = sum(a for a, _ in parts)
    y_up = sum(b for _, b in parts)
    extra = {"p": str(model.p), "theta": str(model.theta), "index": index, "horizon": horizon}
    y_rep = _binomial_report("counter-move-fairness", y_up, reps, 0.5, z_crit, extra=extra)
    mode = "greater" if pf > 0.5 else "less" if pf < 0.5 else "two-sided"
    x_rep = _binomial_report("common-move-drift", x_up, reps, pf, z_crit, mode=mode, extra=extra)
    return y_rep, x_rep


def mc_event_prob(model: ModelSpec, horizon: int, event: Event, reps: int, seed: int, threads: int = 1):
    """Empirical frequency of ``event`` over ``reps`` simulated paths."""
    validate_model(model)

    def work(item):
        c, start, stop = item
        xi, eta = _simulate_chunk(model, horizon, seed, c, stop - start)
        return int(event.mask(xi, eta).sum())

    hits = sum(_map_chunks(work, reps, threads))
    return hits / reps


def calibrate_events(
    models: list,
    horizon: int,
    n_events: int,
    reps: int,
    seed: int,
    z_crit: float = 4.0,
    threads: int = 1,
) -> list:
    """Compare exact event probabilities with MC frequencies for random events.

    Event ``i`` uses model ``models[i % len(models)]``; all events of one model
    are evaluated on the same simulated paths.
    """
    g = rngmod.stream(seed, rngmod.AUX, 1)
    plan = []
    for i in range(n_events):
        model = models[i % len(models)]
        while True:
            ev = random_event(g, horizon)
            exact = exact_event_prob(model, horizon, ev)
            if 0 < exact < 1:
                break
        plan.append((i, model, ev, exact))
    by_model: dict = {}
    for i, model, ev, exact in plan:
        by_model.setdefault(model.label(), (model, []))[1].append((i, ev, exact))
    results = {}
    for label, (model, items) in by_model.items():
        def work(item, items=items, model=model):
            c, start, stop = item
            xi, eta = _simulate_chunk(model, horizon, seed, c, stop - start)
            return np.array([int(ev.mask(xi, eta).sum()) for _, ev, _ in items])

        hits = sum(_map_chunks(work, reps, threads))
        for (i, ev, exact), h in zip(items, hits):
            results[i] = _binomial_report(
                f"calibration[{ev.name}]", int(h), reps, float(exact), z_crit,
                extra={"model": label, "exact": {"num": exact.numerator, "den": exact.denominator}},
            )
    return [results[i] for i in range(n_events)]


def plotdata_csv(counts: BlockCounts) -> str:
    """Cell frequencies next to the uniform target, for external plotting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell", "signs", "count", "frequency", "target"])
    reps = counts.reps
    for cell in range(counts.cells):
        signs = "".join("+" if s == 1 else "-" for s in counts.cell_signs(cell))
        c = int(counts.counts[cell])
        w.writerow([cell, signs, c, repr(c / reps), repr(1 / counts.cells)])
    return buf.getvalue()


def tail_probability_unreached(model: ModelSpec, k: int, l: int, horizon: int, reps: int, seed: int) -> float:
    """MC estimate of P(some of alpha_1..k, beta_1..l unreached by the horizon)."""
    counts = mc_block_pmf(model, k, l, horizon, reps, seed)
    return counts.completed / counts.reps

