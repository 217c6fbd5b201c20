import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from truchet.dynamics import (
    NORMALS,
    State,
    StepClass,
    TraceStatus,
    invariant_m,
    is_period4,
    phi,
    phi_inverse,
    step_class,
    step_classes,
    tile_at,
    trace,
)
from truchet.sequences import MINUS, PLUS, Sequence, bernoulli_sequence, sample_markov


def random_state(seed, p=0.5, q=0.5):
    return State(sample_markov(p, seed), sample_markov(q, seed + 7_000_003), NORMALS[seed % 4])


def local_state(w, wp, v):
    """State whose sequences read ``w`` and ``wp`` on indices -1..1 (``+`` elsewhere)."""
    return State(
        Sequence.from_literal(f"{_word(w[:1])}^{_word(w[1:])}"),
        Sequence.from_literal(f"{_word(wp[:1])}^{_word(wp[1:])}"),
        v,
    )


def _word(ws):
    return "".join("+" if s == PLUS else "−" for s in ws)


# ---- tiles --------------------------------------------------------------------


def test_tile_examples():
    one = Sequence.constant(PLUS)
    assert tile_at(one, one, 0, 0) == PLUS
    w = Sequence.from_literal("^++−")
    wp = Sequence.from_literal("^+++++−")
    assert tile_at(w, wp, 2, 5) == PLUS


@given(st.integers(0, 10**6), st.integers(-40, 40), st.integers(-40, 40))
def test_negating_both_sequences_keeps_tiles(seed, m, n):
    x = random_state(seed)
    assert tile_at(x.omega, x.omega_prime, m, n) == tile_at(-x.omega, -x.omega_prime, m, n)


# ---- phi ------------------------------------------------------------------------


def test_phi_examples():
    w = Sequence.constant(PLUS)
    wp = Sequence.constant(MINUS)
    y = phi(State(w, wp, (0, 1)))
    assert y.v == (-1, 0)
    assert y.omega.offset == -1 and y.omega_prime.offset == 0

    one = Sequence.constant(PLUS)
    y = phi(State(one, one, (1, 0)))
    assert y.v == (0, 1)
    assert y.same_as(State(one, one.shift(1), (0, 1)))


def test_phi_inverse_example_constant():
    one = Sequence.constant(PLUS)
    assert phi_inverse(State(one, one, (1, 0))).v == (0, 1)


def test_phi_inverse_matches_geometric_backward_step():
    x = State(Sequence.alternating(), Sequence.constant(PLUS), (0, 1))
    y = phi_inverse(x)
    sq, v = oracles.geometric_backward(x.omega, x.omega_prime, x.v)
    assert y.v == v
    assert (y.omega.offset - x.omega.offset, y.omega_prime.offset - x.omega_prime.offset) == sq


def test_phi_round_trips():
    for seed in range(1000):
        x = random_state(seed)
        assert phi_inverse(phi(x)).same_as(x, 8)
        assert phi(phi_inverse(x)).same_as(x, 8)


# ---- invariant ---------------------------------------------------------------------


def test_invariant_examples():
    w = Sequence.from_literal("^−")
    wp = Sequence.constant(PLUS)
    assert invariant_m(State(w, wp, (1, 0))) == wp.at(0) == PLUS
    assert invariant_m(State(w, wp, (0, -1))) == PLUS


def test_invariant_conserved_along_orbits():
    for seed in range(50):
        x = random_state(seed)
        m0 = invariant_m(x)
        for _ in range(500):
            x = phi(x)
            assert invariant_m(x) == m0


# ---- step classes -----------------------------------------------------------------


def test_step_class_worked_example():
    one = Sequence.constant(PLUS)
    x = State(one, one, (0, 1))
    assert step_class(x) == StepClass.MATCHING_HORIZONTAL == 3


def test_step_class_agrees_with_domino_oracle_exhaustively():
    for w in itertools.product((PLUS, MINUS), repeat=3):
        for wp in itertools.product((PLUS, MINUS), repeat=3):
            for v in NORMALS:
                x = local_state(w, wp, v)
                assert int(step_class(x)) == oracles.domino_class(x.omega, x.omega_prime, v), (w, wp, v)


def test_vectorized_step_classes_agree():
    rows = list(itertools.product((PLUS, MINUS), repeat=3))
    W, WP, VA, VB, expected = [], [], [], [], []
    for w, wp, v in itertools.product(rows, rows, NORMALS):
        W.append(w)
        WP.append(wp)
        VA.append(v[0])
        VB.append(v[1])
        expected.append(int(step_class(local_state(w, wp, v))))
    got = step_classes(np.array(W), np.array(WP), VA, VB)
    assert got.tolist() == expected


# ---- tracing ------------------------------------------------------------------------


def test_period4_example():
    x = local_state((PLUS, PLUS, MINUS), (PLUS, MINUS, PLUS), (1, 0))
    # a +− pair in omega at 0..1 and a −+ pair in omega' at 0..1
    found = [v for v in NORMALS if trace(State(x.omega, x.omega_prime, v), 10).period == 4]
    assert found
    for v in found:
        assert is_period4(State(x.omega, x.omega_prime, v))


def test_constant_sequences_never_close():
    one = Sequence.constant(PLUS)
    for v in NORMALS:
        res = trace(State(one, one, v), 10_000)
        assert res.status is TraceStatus.OPEN_AT_BUDGET and res.period is None
        assert not is_period4(State(one, one, v))
    x = State(one, one, (1, 0))
    assert phi(phi(x)).v == x.v  # returns to its normal but is displaced


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        trace(random_state(0), 0)


def test_trace_result_invariants():
    for seed in range(200):
        res = trace(random_state(seed), 2000)
        assert sum(res.step_counts) == res.steps
        if res.closed:
            assert tuple(res.displacement[-1]) == (0, 0)
            assert res.final_normal == random_state(seed).v
        # consecutive normals alternate between horizontal and vertical
        nz = res.normals[:, 0] != 0
        assert np.all(nz[1:] != nz[:-1])
        counts = np.bincount(res.classes, minlength=7)[1:]
        assert tuple(counts) == res.step_counts
        xs, ys = res.visited[:, 0], res.visited[:, 1]
        if res.steps:
            xmin, xmax, ymin, ymax = res.extremes
            assert xmin <= xs.min() and xs.max() <= xmax and ymin <= ys.min() and ys.max() <= ymax


def test_trace_matches_geometric_follower():
    for seed in range(100):
        x = random_state(seed, 0.4, 0.6)
        res = trace(x, 200)
        walk = oracles.geometric_walk(x.omega, x.omega_prime, x.v, res.steps)
        assert [tuple(s) for s in res.visited.tolist()] == [sq for sq, _ in walk]
        entries = [tuple(-np.array(e)) for _, e in walk]
        assert [tuple(v) for v in res.normals.tolist()] == entries
        if res.closed:
            assert oracles.geometric_period(x.omega, x.omega_prime, x.v, res.period) == res.period


def test_trace_record_and_plain_agree_and_windows_grow():
    # drifting curves leave the initial window and force regrowth
    x = State(bernoulli_sequence(0.9, 3), bernoulli_sequence(0.9, 4), (1, 0))
    a = trace(x, 5000)
    b = trace(x, 5000, record=False)
    assert (a.status, a.steps, a.step_counts, a.final_normal, a.extremes) == (
        b.status,
        b.steps,
        b.step_counts,
        b.final_normal,
        b.extremes,
    )
    walk = oracles.geometric_walk(x.omega, x.omega_prime, x.v, a.steps)
    assert [tuple(s) for s in a.visited.tolist()] == [sq for sq, _ in walk]
    assert max(abs(a.extremes[0]), a.extremes[1], abs(a.extremes[2]), a.extremes[3]) > 64


def test_trace_record_export():
    rec = trace(random_state(3), 100).to_record()
    assert set(rec) >= {"status", "period", "steps", "class_1", "class_6", "x_min", "y_max"}


def test_period4_agrees_with_dividing_lines_exhaustively():
    hits = 0
    for w in itertools.product((PLUS, MINUS), repeat=3):
        for wp in itertools.product((PLUS, MINUS), repeat=3):
            for v in NORMALS:
                x = local_state(w, wp, v)
                expected = oracles.dividing_line_p4(x.omega, x.omega_prime, v)
                assert is_period4(x) == expected, (w, wp, v)
                hits += expected
    assert hits > 0


def test_period4_classes_are_never_matching():
    for w in itertools.product((PLUS, MINUS), repeat=3):
        for wp in itertools.product((PLUS, MINUS), repeat=3):
            for v in NORMALS:
                x = local_state(w, wp, v)
                if is_period4(x):
                    assert int(step_class(x)) not in (3, 6)
