"""Bi-infinite ``±1`` sequences, the shift, cylinder sets and the Markov measures.

A :class:`Sequence` is a lazily realized element of the full two-sided shift on
``{+1, -1}``.  Symbols are produced by a deterministic source and memoized in a
window that grows by doubling, so any finite query is exact no matter how far
from the origin it reaches.

Textual literals use ``+`` and ``−`` (``-`` is accepted on input) with a caret
placed in front of the symbol at index 0::

    >>> s = Sequence.from_literal("−+^+−−")
    >>> s.at(-1), s.at(0), s.at(1)
    (1, 1, -1)
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Callable, Iterable, Sequence as _Seq

import numpy as np

from . import _keyed

PLUS = 1
MINUS = -1
SYMBOLS = (PLUS, MINUS)

_GLYPH = {PLUS: "+", MINUS: "−"}
_PARSE = {"+": PLUS, "-": MINUS, "−": MINUS}


def symbol_str(s: int) -> str:
    return _GLYPH[int(s)]


def word_str(word: Iterable[int]) -> str:
    return "".join(_GLYPH[int(s)] for s in word)


def parse_word(text: str) -> tuple[int, ...]:
    """``"+−+"`` -> ``(1, -1, 1)``; whitespace is ignored."""
    try:
        return tuple(_PARSE[ch] for ch in text if not ch.isspace())
    except KeyError as exc:
        raise ValueError(f"invalid symbol {exc.args[0]!r} in {text!r}") from None


def parse_literal(text: str) -> tuple[tuple[int, ...], int]:
    """Parse a caret literal into ``(symbols, position of index 0)``."""
    text = "".join(ch for ch in text if not ch.isspace())
    if text.count("^") != 1:
        raise ValueError(f"literal must contain exactly one '^': {text!r}")
    left, right = text.split("^")
    if not right:
        raise ValueError(f"'^' must precede a symbol: {text!r}")
    return parse_word(left + right), len(parse_word(left))


def format_literal(symbols: Iterable[int], zero: int) -> str:
    symbols = list(symbols)
    if not 0 <= zero < len(symbols):
        raise ValueError("index 0 must lie inside the word")
    return word_str(symbols[:zero]) + "^" + word_str(symbols[zero:])


# ---------------------------------------------------------------------------
# memoized sources


class _Source:
    """A memoized realization of one bi-infinite sequence.

    Subclasses implement :meth:`_values` (stateless, index-addressed) or
    override the two block methods when each symbol depends on its neighbour.
    Reads take an atomic snapshot of ``(lo, data)``; growth is serialized by a
    lock, so concurrent queries are safe.
    """

    _MIN_GROW = 16
    _GROW = 1.0  # growth step as a fraction of the current width

    def __init__(self, lo: int = 0, data: np.ndarray | None = None):
        if data is None:
            data = np.empty(0, dtype=np.int8)
        self._win = (lo, data)
        self._lock = threading.Lock()

    def _values(self, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _left_block(self, start: int, stop: int, right_neighbour: int | None) -> np.ndarray:
        return self._values(np.arange(start, stop, dtype=np.int64))

    def _right_block(self, start: int, stop: int, left_neighbour: int | None) -> np.ndarray:
        return self._values(np.arange(start, stop, dtype=np.int64))

    @property
    def realized(self) -> tuple[int, int]:
        lo, data = self._win
        return lo, lo + len(data)

    def ensure(self, start: int, stop: int) -> tuple[int, np.ndarray]:
        lo, data = self._win
        if start >= lo and stop <= lo + len(data):
            return lo, data
        with self._lock:
            lo, data = self._win
            hi = lo + len(data)
            if start >= lo and stop <= hi:
                return lo, data
            if len(data) == 0:
                lo = hi = min(max(0, start), stop)
            new_lo, new_hi = lo, hi
            while new_lo > start:
                new_lo -= max(self._MIN_GROW, int(self._GROW * (new_hi - new_lo)))
            while new_hi < stop:
                new_hi += max(self._MIN_GROW, int(self._GROW * (new_hi - new_lo)))
            parts = []
            if new_lo < lo:
                parts.append(self._left_block(new_lo, lo, int(data[0]) if len(data) else None))
            parts.append(data)
            if new_hi > hi:
                parts.append(self._right_block(hi, new_hi, int(data[-1]) if len(data) else None))
            data = np.concatenate(parts).astype(np.int8, copy=False)
            data.setflags(write=False)
            self._win = (new_lo, data)
            return new_lo, data

    def at(self, n: int) -> int:
        lo, data = self._win
        i = n - lo
        if 0 <= i < len(data):
            return int(data[i])
        lo, data = self.ensure(n, n + 1)
        return int(data[n - lo])

    def window(self, start: int, stop: int) -> np.ndarray:
        lo, data = self.ensure(start, stop)
        return data[start - lo : stop - lo]


class _Constant(_Source):
    def __init__(self, s: int):
        super().__init__()
        self.s = s

    def _values(self, idx):
        return np.full(len(idx), self.s, dtype=np.int8)


class _Periodic(_Source):
    def __init__(self, word: tuple[int, ...]):
        super().__init__()
        self.word = np.asarray(word, dtype=np.int8)

    def _values(self, idx):
        return self.word[idx % len(self.word)]


class _Literal(_Source):
    """A finite word anchored at index 0, continued by periodic tails."""

    def __init__(self, symbols, zero, left_tail, right_tail):
        super().__init__()
        self.core = np.asarray(symbols, dtype=np.int8)
        self.first = -zero
        self.left = np.asarray(left_tail, dtype=np.int8)
        self.right = np.asarray(right_tail, dtype=np.int8)

    def _values(self, idx):
        pos = idx - self.first
        n = len(self.core)
        out = np.empty(len(idx), dtype=np.int8)
        mid = (pos >= 0) & (pos < n)
        out[mid] = self.core[pos[mid]]
        lt = pos < 0
        # the left tail is read right-to-left, ending next to the core
        out[lt] = self.left[(pos[lt] % len(self.left))]
        rt = pos >= n
        out[rt] = self.right[(pos[rt] - n) % len(self.right)]
        return out


class _Function(_Source):
    def __init__(self, fn: Callable[[np.ndarray], np.ndarray]):
        super().__init__()
        self.fn = fn

    def _values(self, idx):
        return np.asarray(self.fn(idx), dtype=np.int8)


class _Negated(_Source):
    def __init__(self, base: "Sequence"):
        super().__init__()
        self.base = base

    def _values(self, idx):
        if len(idx) == 0:
            return np.empty(0, dtype=np.int8)
        return -self.base.window(int(idx[0]), int(idx[-1]) + 1)


class _Bernoulli(_Source):
    def __init__(self, r: float, seed: int):
        super().__init__()
        self.r = r
        self.key = _keyed.stream_key(seed, _keyed.BERNOULLI)

    def _values(self, idx):
        u = _keyed.uniform(self.key, idx)
        return np.where(u < self.r, PLUS, MINUS).astype(np.int8)


def _markov_origin(seeds: np.ndarray) -> np.ndarray:
    u = _keyed.uniform(_keyed.stream_key(seeds, _keyed.ORIGIN), np.zeros_like(seeds, dtype=np.int64))
    return np.where(u < 0.5, PLUS, MINUS).astype(np.int8)


def _markov_flips(seeds: np.ndarray, stream: int, start: int, stop: int, p: float) -> np.ndarray:
    """``flips[i, j]`` is true when decision ``start + j`` of seed ``i`` changes sign."""
    k1, k2 = _keyed.stream_key(seeds, stream)
    ctr = np.arange(start, stop, dtype=np.int64)
    u = _keyed.uniform((k1[:, None], k2[:, None]), ctr[None, :])
    return u >= p


def _propagate(boundary: np.ndarray, flips: np.ndarray) -> np.ndarray:
    parity = np.cumsum(flips, axis=1, dtype=np.int64) & 1
    return (boundary[:, None] * (1 - 2 * parity)).astype(np.int8)


class _Markov(_Source):
    def __init__(self, p: float, seed: int):
        seeds = np.atleast_1d(_keyed.as_u64(seed))
        super().__init__(0, _markov_origin(seeds))
        self.p = p
        self.seeds = seeds

    def _right_block(self, start, stop, left_neighbour):
        # decision j relates omega_{j+1} to omega_j
        flips = _markov_flips(self.seeds, _keyed.RIGHT, start - 1, stop - 1, self.p)
        return _propagate(np.array([left_neighbour], dtype=np.int8), flips)[0]

    def _left_block(self, start, stop, right_neighbour):
        # decision j relates omega_{-j-1} to omega_{-j}; build outward then reverse
        flips = _markov_flips(self.seeds, _keyed.LEFT, -stop, -start, self.p)
        return _propagate(np.array([right_neighbour], dtype=np.int8), flips)[0][::-1]


# ---------------------------------------------------------------------------
# public types


class Sequence:
    """A bi-infinite ``±1`` sequence ``n -> omega_n``.

    Shifting is O(1): shifted sequences share the memo of their parent.
    """

    __slots__ = ("_src", "_offset")

    def __init__(self, source: _Source, offset: int = 0):
        self._src = source
        self._offset = offset

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, s: int = PLUS) -> "Sequence":
        _check_symbol(s)
        return cls(_Constant(int(s)))

    @classmethod
    def alternating(cls) -> "Sequence":
        """``omega^alt`` with ``omega_n = (-1)**n``."""
        return cls(_Periodic((PLUS, MINUS)))

    @classmethod
    def periodic(cls, word: str | _Seq[int], phase: int = 0) -> "Sequence":
        """``omega_n = word[(n + phase) mod len(word)]``."""
        w = parse_word(word) if isinstance(word, str) else tuple(int(s) for s in word)
        if not w:
            raise ValueError("empty period")
        for s in w:
            _check_symbol(s)
        return cls(_Periodic(w), phase)

    @classmethod
    def from_literal(cls, text: str, left_tail: str = "+", right_tail: str = "+") -> "Sequence":
        """Caret literal continued periodically by ``left_tail`` / ``right_tail``.

        The left tail repeats so that its last symbol sits immediately left of
        the literal.
        """
        symbols, zero = parse_literal(text)
        lt, rt = parse_word(left_tail), parse_word(right_tail)
        if not lt or not rt:
            raise ValueError("tails must be non-empty")
        return cls(_Literal(symbols, zero, lt, rt))

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray]) -> "Sequence":
        """Wrap a vectorized rule ``int64 indices -> ±1 array``."""
        return cls(_Function(fn))

    # -- access -----------------------------------------------------------
    def at(self, n: int) -> int:
        return self._src.at(n + self._offset)

    def __getitem__(self, n: int) -> int:
        return self._src.at(n + self._offset)

    def window(self, start: int, stop: int) -> np.ndarray:
        """Read-only ``int8`` array of ``omega_start, ..., omega_{stop-1}``."""
        if stop < start:
            raise ValueError("stop < start")
        return self._src.window(start + self._offset, stop + self._offset)

    def shift(self, k: int) -> "Sequence":
        """``sigma**k``: ``shift(k).at(n) == at(n + k)``."""
        return Sequence(self._src, self._offset + k)

    def __neg__(self) -> "Sequence":
        return Sequence(_Negated(self))

    def equals_on(self, other: "Sequence", start: int, stop: int) -> bool:
        return bool(np.array_equal(self.window(start, stop), other.window(start, stop)))

    def literal(self, start: int, stop: int) -> str:
        """Caret literal of indices ``start..stop-1`` (which must contain 0)."""
        return format_literal(self.window(start, stop), -start)

    @property
    def source(self) -> _Source:
        return self._src

    @property
    def offset(self) -> int:
        return self._offset

    def __repr__(self) -> str:
        return f"Sequence({self.literal(-4, 5)}...)"


def shift(seq: Sequence, k: int) -> Sequence:
    return seq.shift(k)


def at(seq: Sequence, n: int) -> int:
    return seq.at(n)


def _check_symbol(s) -> None:
    if s not in SYMBOLS:
        raise ValueError(f"symbol must be +1 or -1, got {s!r}")


@dataclass(frozen=True)
class MarkovParams:
    """Persistence probability ``p`` of the stationary two-state chain."""

    p: float

    def __post_init__(self):
        if not (0 < self.p < 1):
            raise ValueError(f"p must lie in the open interval (0, 1), got {self.p!r}")


@dataclass(frozen=True)
class CylinderPattern:
    """Symbols at indices ``lo..hi`` (inclusive); index 0 is the anchored entry."""

    lo: int
    hi: int
    word: tuple[int, ...]

    def __post_init__(self):
        if not (self.lo <= 0 <= self.hi):
            raise ValueError("need lo <= 0 <= hi")
        if len(self.word) != self.hi - self.lo + 1:
            raise ValueError("word length must be hi - lo + 1")
        for s in self.word:
            _check_symbol(s)

    @classmethod
    def parse(cls, text: str) -> "CylinderPattern":
        """``"−^+"`` -> pattern on indices 0..1; without a caret index 0 is the first symbol."""
        if "^" not in text:
            text = "^" + text
        symbols, zero = parse_literal(text)
        return cls(-zero, len(symbols) - 1 - zero, symbols)

    def __str__(self) -> str:
        return format_literal(self.word, -self.lo)

    def matches(self, seq: Sequence) -> bool:
        return bool(np.array_equal(seq.window(self.lo, self.hi + 1), self.word))

    def extend(self, s: int, side: str = "right") -> "CylinderPattern":
        if side == "right":
            return CylinderPattern(self.lo, self.hi + 1, self.word + (s,))
        return CylinderPattern(self.lo - 1, self.hi, (s,) + self.word)


def _p_value(params) -> Real:
    return params.p if isinstance(params, MarkovParams) else params


def cylinder_measure(params: MarkovParams | Real, pat: CylinderPattern | str):
    """``mu_p`` of a cylinder set: ``p**k (1-p)**(adjacent pairs - k) / 2``.

    ``k`` counts adjacent equal pairs.  Exact when ``p`` is a ``Fraction``.
    The degenerate endpoints ``p = 0, 1`` are accepted here.
    """
    p = _p_value(params)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if isinstance(pat, str):
        pat = CylinderPattern.parse(pat)
    w = pat.word
    k = sum(1 for a, b in zip(w, w[1:]) if a == b)
    pairs = len(w) - 1
    half = Fraction(1, 2) if isinstance(p, (Fraction, int)) else 0.5
    return half * p**k * (1 - p) ** (pairs - k)


def sample_markov(params: MarkovParams | float, seed: int) -> Sequence:
    """A ``mu_p`` sample: fair coin at 0, then persistence ``p`` in both directions."""
    if not isinstance(params, MarkovParams):
        params = MarkovParams(params)
    return Sequence(_Markov(float(params.p), seed))


def degenerate_markov(p: int, seed: int = 0) -> Sequence:
    """Samples of the endpoint measures: ``mu_1`` (constants) and ``mu_0`` (alternating)."""
    coin = _markov_origin(np.atleast_1d(_keyed.as_u64(seed)))[0]
    if p == 1:
        return Sequence.constant(int(coin))
    if p == 0:
        return Sequence.alternating().shift(0 if coin == PLUS else 1)
    raise ValueError("degenerate constructors exist only for p in {0, 1}")


def bernoulli_sequence(r: float, seed: int) -> Sequence:
    """Independent entries, each ``+1`` with probability ``r``."""
    if not 0 <= r <= 1:
        raise ValueError("r must lie in [0, 1]")
    return Sequence(_Bernoulli(float(r), seed))


# ---------------------------------------------------------------------------
# batch windows (identical to the lazy sequences of the same seeds)


def markov_windows(p: float, seeds: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Rows equal ``sample_markov(p, seeds[i]).window(start, stop)``."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    if start > 0 or stop <= 0:
        raise ValueError("batch windows must contain index 0")
    origin = _markov_origin(seeds)
    right = _propagate(origin, _markov_flips(seeds, _keyed.RIGHT, 0, stop - 1, p))
    left = _propagate(origin, _markov_flips(seeds, _keyed.LEFT, 0, -start, p))[:, ::-1]
    return np.concatenate([left, origin[:, None], right], axis=1)


def bernoulli_windows(r: float, seeds: np.ndarray, start: int, stop: int) -> np.ndarray:
    seeds = np.asarray(seeds, dtype=np.uint64)
    k1, k2 = _keyed.stream_key(seeds, _keyed.BERNOULLI)
    idx = np.arange(start, stop, dtype=np.int64)
    u = _keyed.uniform((k1[:, None], k2[:, None]), idx[None, :])
    return np.where(u < r, PLUS, MINUS).astype(np.int8)
