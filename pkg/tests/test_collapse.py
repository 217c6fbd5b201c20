import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracles
from truchet import _keyed
from truchet.cocycle import block_counts, insertion_ratio, nu_On_sequence, transport_q
from truchet.collapse import (
    P4,
    RENORMALIZED,
    BudgetExhausted,
    InsertionRule,
    InvariantViolation,
    NotRenormalizable,
    NotZeroCollapsible,
    P4Detected,
    _walk_to_kept,
    collapse,
    collapsed_step_counts,
    collapsibility,
    first_return,
    first_return_full,
    in_r1,
    insert,
    kept_mask,
    predicted_return_time,
    renormalization_report,
    repeated_renormalize,
    rho,
    rho_with_witnesses,
)
from truchet.dynamics import NORMALS, State, outgoing, phi, step_class, trace
from truchet.montecarlo import MeasureSpec, sample_state
from truchet.sequences import MINUS, PLUS, Sequence, cylinder_measure, format_literal, markov_windows, sample_markov

WORKED = "−++−−−+−+^+−−+++"
HALF = MeasureSpec("markov", 0.5, 0.5)


def r1_states(n, seed, p=0.5, q=0.5):
    """The first ``n`` sampled states lying in R_1."""
    spec = MeasureSpec("markov", p, q)
    out, i = [], 0
    while len(out) < n:
        x = sample_state(spec, seed, i)
        i += 1
        if in_r1(x, 256):
            out.append(x)
    return out


# ---- collapsibility ---------------------------------------------------------------


def test_alternating_is_never_collapsible():
    alt = Sequence.alternating()
    for h in (2, 16, 1024):
        col = collapsibility(alt, h)
        assert not col.zero
        assert str(col.unbounded) == f"Unknown({h})"
        assert col.unbounded.horizon == h
    assert not collapsibility(alt.shift(1), 64).zero


def test_constant_is_collapsible():
    for h in (2, 100, 4096):
        col = collapsibility(Sequence.constant(PLUS), h)
        assert col.zero and str(col.unbounded) == "Yes" and col.collapsible


def test_one_sided_witness():
    # kept indices only to the left: −+ repeated from index 1 onwards
    s = Sequence.from_function(lambda idx: np.where(idx <= 0, PLUS, np.where(idx % 2, MINUS, PLUS)))
    assert str(collapsibility(s, 64).unbounded) == "NoWitness(right)"


def test_horizon_must_be_at_least_two():
    with pytest.raises(ValueError):
        collapsibility(Sequence.constant(PLUS), 1)


def test_zero_collapsible_fraction():
    n = 100_000
    W = markov_windows(0.5, _keyed.derive_seeds(77, n), -1, 2)
    zero = kept_mask(W)[:, 0]
    frac = np.mean(~zero)
    assert abs(frac - 0.5) <= 3 * np.sqrt(0.25 / n)


# ---- collapse ------------------------------------------------------------------------


def test_worked_example():
    w = Sequence.from_literal(WORKED)
    c = collapse(w, 64)
    assert c.eta.literal(-3, 3) == "+−−^+−+"
    assert c.eta.at(3) == PLUS
    assert c.kept_indices(-3, 3).tolist() == [-7, -6, -5, 0, 1, 4, 5]
    assert c.rule.counts(-4, 3) == [1, 0, 0, 2, 0, 1, 0, 0]


def test_constant_collapses_to_itself():
    one = Sequence.constant(PLUS)
    c = collapse(one, 64)
    assert c.eta.equals_on(one, -200, 200)
    assert c.rule.counts(-50, 50) == [0] * 101


def test_collapse_requires_zero():
    with pytest.raises(NotZeroCollapsible):
        collapse(Sequence.from_literal("^−+"), 64)


@given(st.lists(st.sampled_from([PLUS, MINUS]), min_size=3, max_size=40), st.data())
def test_collapse_matches_string_oracle(word, data):
    zero = data.draw(st.integers(1, len(word) - 2))
    flags = oracles.naive_kept(word)
    assume(flags[zero - 1])
    kept, new_zero = oracles.naive_collapse(word, zero)
    c = collapse(Sequence.from_literal(format_literal(word, zero)), 64)
    got = c.eta.window(-new_zero, len(kept) - new_zero)
    assert got.tolist() == kept


def test_insert_collapse_round_trip():
    checked = 0
    for seed in range(3000):
        w = sample_markov(0.5, seed)
        if not collapsibility(w, 256).collapsible:
            continue
        c = collapse(w, 256)
        back = insert(c.eta, c.rule)
        lo, hi = int(c.kept_index(-40)), int(c.kept_index(40))
        assert back.equals_on(w, lo, hi)
        checked += 1
        if checked == 1000:
            break
    assert checked == 1000


def test_collapse_insert_round_trip():
    q = float(transport_q(0.5))
    ratio = float(insertion_ratio(0.5)) / (1 + float(insertion_ratio(0.5)))
    for seed in range(1000):
        eta = sample_markov(q, seed)
        rule = InsertionRule.random(eta, ratio, seed)
        c = collapse(insert(eta, rule), 256)
        assert c.eta.equals_on(eta, -30, 31)
        assert c.rule.counts(-30, 30) == rule.counts(-30, 30)


def test_shift_equivariance():
    for seed in range(200):
        w = sample_markov(0.6, seed)
        if not collapsibility(w, 256).collapsible:
            continue
        c = collapse(w, 256)
        k1 = c.kept_index(1)
        assert collapse(w.shift(k1), 256).eta.equals_on(c.eta.shift(1), -30, 31)


def test_kept_indices_increase():
    w = sample_markov(0.4, 9)
    while not collapsibility(w, 256).collapsible:
        w = w.shift(1)
    ks = collapse(w, 256).kept_indices(-100, 100)
    assert ks[100] == 0 and np.all(np.diff(ks) > 0)
    assert np.all((np.diff(ks) - 1) % 2 == 0)


# ---- insert -------------------------------------------------------------------------


def test_insert_examples():
    one = Sequence.constant(PLUS)
    assert insert(one, InsertionRule()).equals_on(one, -100, 100)
    s = insert(one, InsertionRule({0: 1}))
    assert s.window(0, 4).tolist() == [PLUS, MINUS, PLUS, PLUS]
    assert s.window(-3, 0).tolist() == [PLUS] * 3


def test_insert_rejects_bad_rules():
    eta = Sequence.from_literal("^−+")
    with pytest.raises(InvariantViolation):
        insert(eta, InsertionRule())
    with pytest.raises(ValueError):
        InsertionRule({3: -1})
    # violations beyond the up-front check surface lazily
    far = Sequence.from_function(lambda idx: np.where(idx == 500, MINUS, PLUS))
    s = insert(far, InsertionRule(), check_radius=8)
    with pytest.raises(InvariantViolation):
        s.window(0, 600)


def test_preimage_of_cylinder_is_scaled_collapsed_cylinder():
    p = Fraction(1, 2)
    q = transport_q(p)
    for word in [(PLUS,), (MINUS,), (PLUS, MINUS), (MINUS, PLUS), (PLUS, PLUS, MINUS)]:
        exact = p * cylinder_measure(q, "^" + "".join("+" if s == PLUS else "−" for s in word))
        approx = oracles.preimage_measure(p, word, 0, 8)
        assert approx <= exact
        assert float(exact - approx) < 1e-3 * len(word)


# ---- rho ------------------------------------------------------------------------------


def test_rho_examples():
    one = Sequence.constant(PLUS)
    x = State(one, one, (1, 0))
    assert rho(x, 64).same_as(x, 50)
    w = Sequence.from_literal(WORKED)
    y = rho(State(w, one, (0, 1)), 64)
    assert y.v == (0, 1)
    assert y.omega.equals_on(collapse(w, 64).eta, -20, 20)


def test_rho_reports_component():
    one = Sequence.constant(PLUS)
    with pytest.raises(NotRenormalizable) as err:
        rho(State(one, Sequence.alternating(), (1, 0)), 64, 64)
    assert err.value.component == "omega_prime"
    with pytest.raises(NotRenormalizable) as err:
        rho(State(Sequence.from_literal("^−+"), one, (1, 0)), 64, 64)
    assert err.value.component == "omega"


# ---- first returns ------------------------------------------------------------------


def test_return_times_and_branches():
    for x in r1_states(1000, 3):
        _, w, wp = rho_with_witnesses(x, 256)
        r = first_return_full(x)
        assert r.return_time % 4 == 1
        assert r.return_time == predicted_return_time(x, w.rule, wp.rule)
        if outgoing(x) == (1, 0):
            assert r.return_time == 4 * w.rule(0) + 1
        assert sum(r.step_counts) == r.return_time


def test_return_blocks_match_matrix_rows():
    for x in r1_states(500, 4, 0.4, 0.7):
        r = first_return_full(x)
        m = (r.return_time - 1) // 4
        j = int(step_class(rho(x, 256)))
        assert r.step_counts == block_counts(j, m)
        assert collapsed_step_counts(x) == r.step_counts


def test_collapsed_step_count_examples():
    assert block_counts(3, 1) == (1, 1, 1, 0, 0, 2)
    assert block_counts(2, 0) == (0, 1, 0, 0, 0, 0)
    assert all(sum(block_counts(j, m)) == 4 * m + 1 for j in range(1, 7) for m in range(6))
    # a concrete state: one −+ block after omega_0, constant elsewhere
    w = Sequence.from_literal("^+−++")
    one = Sequence.constant(PLUS)
    x = State(w, one, (0, 1))  # moves right first
    r = first_return_full(x)
    assert r.return_time == 5
    assert r.step_counts == block_counts(int(step_class(rho(x, 64))), 1)


def test_conjugacy():
    for x in r1_states(1000, 5):
        y, _ = first_return(x)
        assert rho(y, 256).same_as(phi(rho(x, 256)), 12)


def test_curve_level_collapse():
    for x in r1_states(100, 6):
        _, w, wp = rho_with_witnesses(x, 256)
        res = trace(x, 400)
        kept = []
        for m, n in res.visited.tolist():
            i, j = w.kept.index_of(m), wp.kept.index_of(n)
            if i is not None and j is not None:
                kept.append((i, j))
        down = trace(rho(x, 256), len(kept))
        assert kept == [tuple(s) for s in down.visited.tolist()][: len(kept)]


def test_first_return_errors():
    x = next(s for s in r1_states(200, 8) if first_return(s)[1] > 1)
    with pytest.raises(BudgetExhausted):
        first_return(x, budget=1)
    with pytest.raises(NotRenormalizable):
        first_return(State(Sequence.alternating(), Sequence.constant(PLUS), (1, 0)))
    # a period-4 loop through the origin never meets a kept square
    p4 = State(Sequence.from_literal("+^+−"), Sequence.from_literal("+^−+"), NORMALS[0])
    loops = [State(p4.omega, p4.omega_prime, v) for v in NORMALS]
    loops = [s for s in loops if trace(s, 10).period == 4]
    assert loops
    with pytest.raises(P4Detected):
        _walk_to_kept(loops[0], 100)


# ---- repeated renormalization ---------------------------------------------------------


def test_period4_stops_at_level_zero():
    x = next(
        State(Sequence.from_literal("+^+−"), Sequence.from_literal("+^−+"), v)
        for v in NORMALS
        if trace(State(Sequence.from_literal("+^+−"), Sequence.from_literal("+^−+"), v), 10).period == 4
    )
    out = repeated_renormalize(x, 5)
    assert [o.outcome for o in out] == [P4] and out[0].level == 0


def test_period_20_reaches_p4_with_decreasing_period():
    found = 0
    for i in range(2000):
        x = sample_state(HALF, 5, i)
        if trace(x, 100, record=False).period != 20:
            continue
        out = repeated_renormalize(x, 6, track_period=True)
        assert out[-1].outcome == P4 and out[-1].level <= 4
        periods = [o.period for o in out]
        assert periods[0] == 20 and periods[-1] == 4
        assert all(a > b for a, b in zip(periods, periods[1:]))
        found += 1
        if found == 5:
            break
    assert found == 5


@pytest.mark.slow
def test_depth_five_fraction_matches_nu_O5():
    n = 1000
    target = float(nu_On_sequence(1, 1, 5)[5])
    reached = 0
    for i in range(n):
        out = repeated_renormalize(sample_state(HALF, 11, i), 5, horizon=1024)
        reached += sum(o.outcome == RENORMALIZED for o in out) == 5
    sd = np.sqrt(target * (1 - target) / n)
    assert abs(reached / n - target) <= 3 * sd


def test_renormalization_report_is_json():
    runs = [repeated_renormalize(sample_state(HALF, 12, i), 3) for i in range(30)]
    rep = renormalization_report(runs)
    text = json.dumps(rep)
    back = json.loads(text)
    assert back["runs"] == 30
    level0 = back["levels"][0]
    assert level0["level"] == 0
    assert sum(level0["outcomes"].values()) == 30
    for run in runs:
        for lv in run:
            json.dumps(lv.to_dict())
