import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrwalk import rng as rngmod
from corrwalk.decomposition import (
    UNREACHED, classify_step, decompose, decompose_batch, extract_walks, first_hits, hitting_times,
    reconstruct, reconstruct_batch, run_counters, table1_path, table_rows, to_csv,
)
from corrwalk.models import MM, MP, PM, PP, SHIPPED, JointPath, simulate_batch

# Expected worked-example rows, blanks as "".
EXPECTED_ROWS = [
    (1, 1, -1, 0, 1, 4, 1, -1, 1),
    (2, 0, 0, 0, 2, 9, 2, 0, 0),
    (3, -1, 1, 0, 3, 10, 3, 1, -1),
    (4, -2, 0, 1, 3, "", 5, "", 0),
    (5, -1, -1, 1, 4, "", 6, "", 1),
    (6, 0, -2, 1, 5, "", 7, "", 0),
    (7, -1, -1, 1, 6, "", 8, "", 1),
    (8, 0, -2, 1, 7, "", "", "", ""),
    (9, 1, -1, 2, 7, "", "", "", ""),
    (10, 2, 0, 3, 7, "", "", "", ""),
]


def test_worked_example_table():
    path = table1_path()
    rows = table_rows(path, decompose(path))
    got = [tuple(r[c] for c in ("n", "B", "W", "T", "S", "alpha", "beta", "X", "Y")) for r in rows]
    assert got == EXPECTED_ROWS


def test_worked_example_parts():
    d = decompose(table1_path())
    assert d.T == (0, 0, 0, 1, 1, 1, 1, 1, 2, 3)
    assert d.S == (1, 2, 3, 3, 4, 5, 6, 7, 7, 7)
    assert d.alpha[:3] == (4, 9, 10) and d.alpha[3] is UNREACHED
    assert d.beta[:7] == (1, 2, 3, 5, 6, 7, 8) and d.beta[7] is UNREACHED
    assert d.X == (-1, 0, 1)
    assert d.Y == (1, 0, -1, 0, 1, 0, 1)
    assert not d.completion_used


def test_worked_example_csv_blanks():
    text = to_csv(table1_path(), decompose(table1_path()))
    lines = text.splitlines()
    assert lines[0] == "n,B,W,T,S,alpha,beta,X,Y"
    assert lines[8] == "8,0,-2,1,7,,,,"


def test_classify_step():
    assert classify_step(PP) == 1 and classify_step(PM) == 0
    assert classify_step(MM) == 1 and classify_step(MP) == 0


def test_run_counters_trivial():
    assert run_counters([0] * 5).T == (0,) * 5
    assert run_counters([1] * 5).T == (1, 2, 3, 4, 5)
    with pytest.raises(ValueError):
        run_counters([0, 2])


def test_hitting_times_all_common():
    assert hitting_times(run_counters([1, 1, 1])).alpha == (1, 2, 3)


def test_single_counter_step():
    d = decompose(JointPath(((1, -1),)))
    assert d.Q == (0,) and d.T == (0,) and d.S == (1,)
    assert d.beta == (1,) and d.Y == (1,) and d.X == ()


def test_all_common_gives_x_equal_b():
    path = JointPath.from_signs((1, -1, -1, 1), (1, -1, -1, 1))
    d = decompose(path)
    assert d.Y == () and d.X == path.B


def test_reconstruct_examples():
    d = decompose(table1_path())
    assert reconstruct(d.X, d.Y, d.T) == (table1_path().B, table1_path().W)
    X = (1, 2, 1)
    assert reconstruct(X, (), (1, 2, 3)) == (X, X)
    Y = (-1, 0, 1)
    assert reconstruct((), Y, (0, 0, 0)) == (Y, tuple(-y for y in Y))


def test_reconstruct_names_missing_entry():
    with pytest.raises(IndexError, match="X_2"):
        reconstruct((1,), (1,), (1, 2))
    with pytest.raises(ValueError):
        reconstruct((1, 2), (), (1, 3))


def test_extract_walks_length_mismatch():
    path = table1_path()
    hits = hitting_times(run_counters((1, 0)))
    with pytest.raises(ValueError):
        extract_walks(path, hits)


def test_completion_lengths_and_flag():
    path = table1_path()
    comp = (rngmod.stream(1, rngmod.ZETA), rngmod.stream(1, rngmod.PSI))
    d = decompose(path, comp, length=(5, 9))
    assert len(d.X) == 5 and len(d.Y) == 9 and d.completion_used
    assert d.X[:3] == (-1, 0, 1) and d.Y[:7] == (1, 0, -1, 0, 1, 0, 1)
    assert all(abs(b - a) == 1 for a, b in zip(d.X, d.X[1:]))


def test_completion_tail_is_fair():
    # all-counter path: every X increment comes from the zeta stream
    path = JointPath.from_signs((1,), (-1,))
    n = 100_000
    g_z, g_p = rngmod.stream(9, rngmod.ZETA), rngmod.stream(9, rngmod.PSI)
    d = decompose(path, (g_z, g_p), length=(n, 1))
    steps = np.diff(np.concatenate([[0], d.X]))
    assert abs(np.mean(steps == 1) - 0.5) < 3 * 0.5 / np.sqrt(n)


def test_completion_streams_not_used_without_need():
    path = JointPath.from_signs((1, 1), (1, -1))
    comp = (rngmod.stream(1, rngmod.ZETA), rngmod.stream(1, rngmod.PSI))
    assert not decompose(path, comp, length=(1, 1)).completion_used


def _all_paths(N):
    pairs = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=np.int8)
    idx = np.array(list(itertools.product(range(4), repeat=N)))
    return pairs[idx, 0], pairs[idx, 1]


def test_exhaustive_structure_n8():
    N = 8
    xi, eta = _all_paths(N)
    Q = xi == eta
    T = np.cumsum(Q, axis=1)
    assert np.all(T + np.cumsum(~Q, axis=1) == np.arange(1, N + 1))
    alpha, beta = first_hits(Q, N), first_hits(~Q, N)
    idx = np.arange(1, N + 1)
    for h in (alpha, beta):
        assert np.all((h == 0) | (h >= idx))
        reached = h > 0
        # once unreached, stays unreached
        assert np.all(reached[:, 1:] <= reached[:, :-1])
        both = reached[:, 1:] & reached[:, :-1]
        assert np.all(np.diff(h, axis=1)[both] > 0)
    # disjointness: each step index is a common or a counter hit, never both
    occ = np.zeros((xi.shape[0], N + 1), dtype=int)
    r = np.arange(xi.shape[0])[:, None]
    np.add.at(occ, (r, alpha), 1)
    np.add.at(occ, (r, beta), 1)
    assert np.all(occ[:, 1:] == 1)
    for n in range(1, N + 1):
        for m in range(1, N + 2 - n):
            assert np.all((alpha[:, n - 1] > 0) | (beta[:, m - 1] > 0))


def test_batch_matches_scalar_exhaustively_n6():
    xi, eta = _all_paths(6)
    T, X, Y, nx, ny = decompose_batch(xi, eta)
    for i in range(0, xi.shape[0], 7):
        d = decompose(JointPath.from_signs(xi[i].tolist(), eta[i].tolist()))
        assert tuple(T[i]) == d.T
        assert tuple(X[i, : nx[i]]) == d.X and tuple(Y[i, : ny[i]]) == d.Y


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_batch_round_trip_and_scalar_agreement(name):
    xi, eta = simulate_batch(SHIPPED[name], 64, 2_000, seed=17)
    T, X, Y, nx, ny = decompose_batch(xi, eta)
    B, W = reconstruct_batch(X, Y, T)
    assert np.array_equal(B, np.cumsum(xi, axis=1)) and np.array_equal(W, np.cumsum(eta, axis=1))
    for i in range(0, 2_000, 97):
        path = JointPath.from_signs(xi[i].tolist(), eta[i].tolist())
        d = decompose(path)
        assert reconstruct(d.X, d.Y, d.T) == (path.B, path.W)
        assert tuple(X[i, : nx[i]]) == d.X


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([(1, 1), (1, -1), (-1, 1), (-1, -1)]), min_size=1, max_size=40))
def test_round_trip_property(steps):
    path = JointPath(tuple(steps))
    d = decompose(path)
    assert reconstruct(d.X, d.Y, d.T) == (path.B, path.W)
    assert len(d.X) == d.T[-1] and len(d.Y) == d.S[-1]
    for seq in (d.X, d.Y):
        assert all(abs(b - a) == 1 for a, b in zip((0,) + seq, seq))


def test_to_json_uses_null_for_unreached():
    doc = decompose(table1_path()).to_json()
    assert doc["alpha"][3] is None and doc["N"] == 10
