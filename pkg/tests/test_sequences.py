import itertools
import threading
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from truchet import _keyed
from truchet.sequences import (
    MINUS,
    PLUS,
    CylinderPattern,
    MarkovParams,
    Sequence,
    at,
    bernoulli_sequence,
    bernoulli_windows,
    cylinder_measure,
    degenerate_markov,
    format_literal,
    markov_windows,
    parse_literal,
    sample_markov,
    shift,
)

symbols = st.sampled_from([PLUS, MINUS])
words = st.lists(symbols, min_size=1, max_size=12)


def within(value, target, n, sigmas):
    sd = np.sqrt(target * (1 - target) / n)
    return abs(value - target) <= sigmas * sd


# ---- at / shift -------------------------------------------------------------


def test_alternating_values():
    alt = Sequence.alternating()
    assert at(alt, 3) == MINUS
    assert alt.at(0) == PLUS and alt.at(-1) == MINUS


def test_constant_far_left():
    assert Sequence.constant(PLUS).at(-7) == PLUS


def test_markov_queries_are_deterministic():
    a = sample_markov(0.5, 11)
    b = sample_markov(0.5, 11)
    assert a.at(100) == a.at(100) == b.at(100)


def test_shift_examples():
    alt = Sequence.alternating()
    assert shift(alt, 1).at(0) == MINUS
    s = sample_markov(0.3, 5)
    assert shift(shift(s, 5), -5).equals_on(s, -20, 21)
    assert shift(s, 0).equals_on(s, -50, 51)


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(0, 2**32))
def test_shift_composition(a, b, seed):
    s = sample_markov(0.6, seed)
    assert shift(shift(s, a), b).equals_on(shift(s, a + b), -30, 31)


def test_shift_does_not_copy_memo():
    s = sample_markov(0.5, 3)
    s.window(-10, 10)
    t = s.shift(1000)
    assert t.source is s.source and t.offset == 1000


def test_query_order_does_not_matter():
    a = sample_markov(0.4, 99)
    b = sample_markov(0.4, 99)
    a.at(5000)
    a.at(-3000)
    b.at(-3000)
    b.at(17)
    assert np.array_equal(a.window(-3000, 5001), b.window(-3000, 5001))


def test_concurrent_queries_agree():
    s = sample_markov(0.5, 2024)
    ref = sample_markov(0.5, 2024).window(-4000, 4000)
    errors = []

    def worker(offset):
        for n in range(-4000 + offset, 4000, 97):
            if s.at(n) != ref[n + 4000]:
                errors.append(n)

    threads = [threading.Thread(target=worker, args=(k,)) for k in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors


def test_negation_and_periodic():
    s = Sequence.periodic("+−−", phase=1)
    assert s.literal(0, 6) == "^−−+−−+"
    assert (-s).at(0) == PLUS


# ---- literals ------------------------------------------------------------------


def test_literal_parse_example():
    s = Sequence.from_literal("−+^+−−")
    assert [s.at(n) for n in range(-2, 3)] == [MINUS, PLUS, PLUS, MINUS, MINUS]


@given(words, st.data())
def test_literal_round_trip(word, data):
    zero = data.draw(st.integers(0, len(word) - 1))
    text = format_literal(word, zero)
    assert parse_literal(text) == (tuple(word), zero)
    assert parse_literal(text.replace("−", "-")) == (tuple(word), zero)


def test_literal_accepts_ascii_minus():
    assert Sequence.from_literal("-+^+").equals_on(Sequence.from_literal("−+^+"), -10, 10)


# ---- measures ---------------------------------------------------------------------


def test_markov_params_open_interval():
    for bad in (0, 1, -0.1, 1.5):
        with pytest.raises(ValueError):
            MarkovParams(bad)
    MarkovParams(0.5)


def test_degenerate_constructors():
    c = degenerate_markov(1, seed=4)
    assert len(set(c.window(-50, 50).tolist())) == 1
    alt = degenerate_markov(0, seed=4)
    w = alt.window(-50, 50)
    assert np.all(w[1:] != w[:-1])


def test_cylinder_measure_examples():
    assert cylinder_measure(Fraction(1, 2), "^++") == Fraction(1, 4)
    for p in (Fraction(1, 3), Fraction(9, 10), 0.25):
        assert cylinder_measure(p, "^+") == Fraction(1, 2)
    # one adjacent pair, a sign change: (1/2)(1 - p)
    assert cylinder_measure(Fraction(1, 2), "^−+") == Fraction(1, 4)


def test_neg_pos_cylinder_frequency():
    n = 1_000_000
    W = markov_windows(0.5, _keyed.derive_seeds(404, n), 0, 2)
    freq = np.mean((W[:, 0] == MINUS) & (W[:, 1] == PLUS))
    assert within(freq, float(cylinder_measure(0.5, "^−+")), n, 3)


def test_cylinder_pattern_parse():
    pat = CylinderPattern.parse("−+^+−")
    assert (pat.lo, pat.hi) == (-2, 1)
    assert str(pat) == "−+^+−"
    assert CylinderPattern.parse("+−") == CylinderPattern(0, 1, (PLUS, MINUS))


@given(words, st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100)), st.sampled_from(["left", "right"]))
def test_cylinder_additivity(word, p, side):
    pat = CylinderPattern(0, len(word) - 1, tuple(word))
    whole = cylinder_measure(p, pat)
    parts = cylinder_measure(p, pat.extend(PLUS, side)) + cylinder_measure(p, pat.extend(MINUS, side))
    assert whole == parts


@pytest.mark.parametrize("length", [1, 2, 3, 5])
def test_cylinder_total_mass(length):
    p = Fraction(2, 7)
    total = sum(cylinder_measure(p, CylinderPattern(0, length - 1, w)) for w in itertools.product((PLUS, MINUS), repeat=length))
    assert total == 1


def test_origin_coin_and_persistence_frequencies():
    n = 100_000
    seeds = _keyed.derive_seeds(17, n)
    W = markov_windows(0.5, seeds, 0, 2)
    assert within(np.mean(W[:, 0] == PLUS), 0.5, n, 3)
    assert within(np.mean(W[:, 0] == W[:, 1]), 0.5, n, 3)


def test_batch_windows_match_lazy_samples():
    seeds = _keyed.derive_seeds(5, 30)
    W = markov_windows(0.7, seeds, -40, 41)
    for s, row in zip(seeds, W):
        assert np.array_equal(sample_markov(0.7, s).window(-40, 41), row)
    B = bernoulli_windows(0.3, seeds, -5, 9)
    for s, row in zip(seeds, B):
        assert np.array_equal(bernoulli_sequence(0.3, s).window(-5, 9), row)


def test_sampler_matches_cylinders_up_to_length_4():
    n = 1_000_000
    p = 0.35
    seeds = _keyed.derive_seeds(2718, n)
    W = markov_windows(p, seeds, -2, 2)  # indices -2..1
    codes = ((W > 0).astype(np.int64) * np.array([8, 4, 2, 1])).sum(axis=1)
    counts = np.bincount(codes, minlength=16)
    for code in range(16):
        word = tuple(PLUS if (code >> (3 - b)) & 1 else MINUS for b in range(4))
        target = cylinder_measure(p, CylinderPattern(-2, 1, word))
        assert within(counts[code] / n, target, n, 4), (word, counts[code] / n, target)


def test_shift_invariance_of_frequencies():
    n = 200_000
    p = 0.8
    seeds = _keyed.derive_seeds(31, n)
    W = markov_windows(p, seeds, -30, 31)
    for off in (-30, -7, 0, 12, 28):
        col = off + 30
        freq = np.mean((W[:, col] == PLUS) & (W[:, col + 1] == MINUS))
        target = cylinder_measure(p, "^+−")
        assert within(freq, target, n, 4)


def test_bernoulli_examples():
    assert set(bernoulli_sequence(1.0, 3).window(-20, 20).tolist()) == {PLUS}
    n = 100_000
    seeds = _keyed.derive_seeds(8, n)
    for r in (0.5, 0.8):
        w0 = bernoulli_windows(r, seeds, 0, 1)[:, 0].astype(float)
        target = 2 * r - 1
        assert abs(w0.mean() - target) <= 3 * w0.std() / np.sqrt(n)
    with pytest.raises(ValueError):
        bernoulli_sequence(1.2, 0)
