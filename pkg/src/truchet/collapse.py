"""The collapsing map, its insertion inverse, and renormalization of states.

An index ``k`` is *kept* by ``omega`` unless ``omega_k omega_{k+1} = −+`` or
``omega_{k-1} omega_k = −+``.  Collapsing deletes every maximal ``(−+)^n``
block and re-indexes the kept symbols so that index 0 stays at 0.  Kept
indices are discovered lazily by scanning outward, so collapses of collapses
stay lazy too; a scan that runs ``max_gap`` symbols without meeting a kept
index gives up with :class:`HorizonExhausted`.
"""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import _keyed
from .dynamics import State, is_period4, outgoing, trace
from .sequences import MINUS, PLUS, Sequence, _Source

DEFAULT_HORIZON = 2**12
MAX_HORIZON = 2**16


class CollapseError(Exception):
    """A domain failure of collapsing or renormalizing."""


class NotZeroCollapsible(CollapseError):
    pass


class HorizonExhausted(CollapseError):
    pass


class NotRenormalizable(CollapseError):
    def __init__(self, component: str, reason: str):
        super().__init__(f"{component} component: {reason}")
        self.component = component
        self.reason = reason


class BudgetExhausted(CollapseError):
    pass


class P4Detected(CollapseError):
    """The orbit closed after four steps; such orbits never meet R_1."""


class InvariantViolation(ValueError):
    """An insertion rule leaves a ``−+`` pair of the collapsed word uncovered."""


def kept_mask(w: np.ndarray) -> np.ndarray:
    """Kept flags for ``w[1:-1]`` given a window with one symbol of margin each side."""
    w = np.asarray(w)
    starts_pair = (w[1:-1] == MINUS) & (w[2:] == PLUS)
    ends_pair = (w[:-2] == MINUS) & (w[1:-1] == PLUS)
    return ~(starts_pair | ends_pair)


def is_kept(omega: Sequence, k: int) -> bool:
    a, b, c = omega.at(k - 1), omega.at(k), omega.at(k + 1)
    return not ((b == MINUS and c == PLUS) or (a == MINUS and b == PLUS))


def kept_indices(omega: Sequence, start: int, stop: int) -> np.ndarray:
    """Elements of ``K(omega)`` in ``[start, stop)``."""
    mask = kept_mask(omega.window(start - 1, stop + 1))
    return np.flatnonzero(mask) + start


# ---------------------------------------------------------------------------
# collapsibility


@dataclass(frozen=True)
class Unbounded:
    """Whether kept indices were found far out on both sides.

    ``kind`` is ``"yes"``, ``"no_witness"`` (exactly one side lacked a kept
    index beyond half the horizon; ``direction`` names it) or ``"unknown"``
    (neither side had one).
    """

    kind: str
    horizon: int
    direction: str | None = None

    def __str__(self) -> str:
        if self.kind == "no_witness":
            return f"NoWitness({self.direction})"
        if self.kind == "unknown":
            return f"Unknown({self.horizon})"
        return "Yes"


@dataclass(frozen=True)
class Collapsibility:
    zero: bool
    unbounded: Unbounded

    @property
    def collapsible(self) -> bool:
        return self.zero and self.unbounded.kind == "yes"


def collapsibility(omega: Sequence, horizon: int = DEFAULT_HORIZON) -> Collapsibility:
    """Zero-collapsibility, and kept indices beyond ``±horizon/2`` within ``±horizon``."""
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    ks = kept_indices(omega, -horizon, horizon + 1)
    zero = bool(np.any(ks == 0))
    right = bool(np.any(ks >= horizon / 2))
    left = bool(np.any(ks <= -horizon / 2))
    if left and right:
        unb = Unbounded("yes", horizon)
    elif left or right:
        unb = Unbounded("no_witness", horizon, "right" if left else "left")
    else:
        unb = Unbounded("unknown", horizon)
    return Collapsibility(zero, unb)


# ---------------------------------------------------------------------------
# lazily discovered kept indices


class _KeptIndex:
    """Order-preserving enumeration ``i -> k_i`` of ``K(omega)`` with ``k_0 = 0``."""

    _CHUNK = 64

    def __init__(self, omega: Sequence, max_gap: int):
        if not is_kept(omega, 0):
            raise NotZeroCollapsible("0 is not a kept index")
        self.omega = omega
        self.max_gap = max_gap
        self.right = np.zeros(1, dtype=np.int64)  # k_0, k_1, ...
        self.left = np.zeros(0, dtype=np.int64)  # k_{-1}, k_{-2}, ...
        self._scan_right = 1  # next unscanned index on the right
        self._scan_left = -1
        self._lock = threading.Lock()

    def _chunk(self, missing: int, found: int, scanned: int) -> int:
        # size the scan from the density seen so far, with some slack
        density = max(found, 1) / max(scanned, 1)
        return max(self._CHUNK, int(1.2 * missing / density) + 16)

    def _grow_right(self, i: int) -> None:
        parts = [self.right]
        have = len(self.right)
        while have <= i:
            start = self._scan_right
            chunk = self._chunk(i + 1 - have, have, start)
            found = kept_indices(self.omega, start, start + chunk)
            self._scan_right = start + chunk
            if len(found):
                parts.append(found)
                have += len(found)
            elif self._scan_right - int(parts[-1][-1]) > self.max_gap:
                self.right = np.concatenate(parts)
                raise HorizonExhausted(
                    f"no kept index within {self.max_gap} to the right of {int(parts[-1][-1])}"
                )
        self.right = np.concatenate(parts)

    def _grow_left(self, i: int) -> None:
        # i >= 1 means k_{-i}
        parts = [self.left]
        have = len(self.left)
        while have < i:
            stop = self._scan_left + 1
            chunk = self._chunk(i - have, have, -stop)
            found = kept_indices(self.omega, stop - chunk, stop)
            self._scan_left = stop - chunk - 1
            if len(found):
                parts.append(found[::-1])
                have += len(found)
            else:
                last = int(parts[-1][-1]) if have else 0
                if last - self._scan_left > self.max_gap:
                    self.left = np.concatenate(parts)
                    raise HorizonExhausted(
                        f"no kept index within {self.max_gap} to the left of {last}"
                    )
        self.left = np.concatenate(parts)

    def ensure(self, lo: int, hi: int) -> None:
        """Make ``k_i`` available for ``lo <= i <= hi``."""
        if hi < len(self.right) and -lo <= len(self.left):
            return
        with self._lock:
            if hi >= len(self.right):
                self._grow_right(hi)
            if lo < 0 and -lo > len(self.left):
                self._grow_left(-lo)

    def k(self, i: int) -> int:
        self.ensure(min(i, 0), max(i, 0))
        return int(self.right[i] if i >= 0 else self.left[-i - 1])

    def ks(self, lo: int, hi: int) -> np.ndarray:
        """``k_lo, ..., k_hi`` (inclusive)."""
        self.ensure(min(lo, 0), max(hi, 0))
        if lo >= 0:
            return self.right[lo : hi + 1]
        if hi < 0:
            return self.left[-hi - 1 : -lo][::-1]
        return np.concatenate([self.left[:-lo][::-1], self.right[: hi + 1]])

    def index_of(self, k: int) -> int | None:
        """``i`` with ``k_i = k``, or ``None`` when ``k`` is not kept."""
        if k >= 0:
            while self.right[-1] < k:
                self.ensure(0, 2 * len(self.right))
            j = int(np.searchsorted(self.right, k))
            return j if self.right[j] == k else None
        while len(self.left) == 0 or self.left[-1] > k:
            self.ensure(-2 * len(self.left) - 1, 0)
        j = int(np.searchsorted(-self.left, -k))
        return -(j + 1) if self.left[j] == k else None


class _CollapsedSource(_Source):
    _GROW = 0.25

    def __init__(self, kept: _KeptIndex):
        super().__init__()
        self.kept = kept

    def _values(self, idx):
        if len(idx) == 0:
            return np.empty(0, dtype=np.int8)
        lo, hi = int(idx[0]), int(idx[-1])
        ks = self.kept.ks(lo, hi)
        w = self.kept.omega.window(int(ks[0]), int(ks[-1]) + 1)
        return w[ks - ks[0]]


# ---------------------------------------------------------------------------
# insertion rules


class InsertionRule:
    """Counts ``n_i >= 0``: the word ``(−+)^{n_i}`` goes between ``eta_i`` and ``eta_{i+1}``."""

    def __init__(self, count: Callable[[int], int] | Mapping[int, int] | None = None):
        if count is None:
            count = {}
        if isinstance(count, Mapping):
            table = {int(i): int(n) for i, n in count.items()}
            if any(n < 0 for n in table.values()):
                raise ValueError("insertion counts must be non-negative")
            self._fn = lambda i: table.get(i, 0)
        else:
            self._fn = count

    def __call__(self, i: int) -> int:
        return self._fn(i)

    def counts(self, lo: int, hi: int) -> list[int]:
        """``n_lo, ..., n_hi`` (inclusive)."""
        return [self._fn(i) for i in range(lo, hi + 1)]

    def word(self, i: int) -> tuple[int, ...]:
        return (MINUS, PLUS) * self._fn(i)

    @classmethod
    def from_kept(cls, kept: _KeptIndex) -> "InsertionRule":
        return cls(lambda i: (kept.k(i + 1) - kept.k(i) - 1) // 2)

    @classmethod
    def random(cls, eta: Sequence, ratio: float, seed: int) -> "InsertionRule":
        """``n_i = G_i + [eta_i eta_{i+1} = −+]`` with ``P(G_i >= g) = ratio**g``."""
        key = _keyed.stream_key(seed, _keyed.INSERTION)
        blocks: dict[int, np.ndarray] = {}
        block = 256

        def count(i: int) -> int:
            b = i // block
            if b not in blocks:
                idx = np.arange(b * block, (b + 1) * block, dtype=np.int64)
                u = _keyed.uniform(key, idx)
                g = np.zeros(block, dtype=np.int64) if ratio <= 0 else np.floor(np.log1p(-u) / np.log(ratio))
                w = eta.window(b * block, (b + 1) * block + 1)
                forced = (w[:-1] == MINUS) & (w[1:] == PLUS)
                blocks[b] = g.astype(np.int64) + forced
            return int(blocks[b][i - b * block])

        return cls(count)


def check_rule(eta: Sequence, rule: InsertionRule, lo: int, hi: int) -> None:
    for i in range(lo, hi + 1):
        if rule(i) < 0:
            raise InvariantViolation(f"negative count at {i}")
        if rule(i) == 0 and eta.at(i) == MINUS and eta.at(i + 1) == PLUS:
            raise InvariantViolation(f"n_{i} = 0 but eta_{i} eta_{i+1} = −+")


class _InsertedSource(_Source):
    """``I_f(eta)`` with ``m_0 = 0`` and ``m_{i+1} - m_i = 1 + 2 n_i``."""

    def __init__(self, eta: Sequence, rule: InsertionRule):
        super().__init__()
        self.eta = eta
        self.rule = rule
        self.pos = [0]  # m_lo, ..., m_hi
        self.first = 0  # index i of pos[0]

    def _check(self, i: int) -> None:
        if self.rule(i) == 0 and self.eta.at(i) == MINUS and self.eta.at(i + 1) == PLUS:
            raise InvariantViolation(f"n_{i} = 0 but eta_{i} eta_{i+1} = −+")

    def _cover(self, lo: int, hi: int) -> None:
        while self.pos[-1] <= hi:
            i = self.first + len(self.pos) - 1
            self._check(i)
            self.pos.append(self.pos[-1] + 1 + 2 * self.rule(i))
        while self.pos[0] > lo:
            i = self.first - 1
            self._check(i)
            self.pos.insert(0, self.pos[0] - 1 - 2 * self.rule(i))
            self.first -= 1

    def _values(self, idx):
        if len(idx) == 0:
            return np.empty(0, dtype=np.int8)
        self._cover(int(idx[0]), int(idx[-1]))
        pos = np.asarray(self.pos, dtype=np.int64)
        j = np.searchsorted(pos, idx, side="right") - 1
        i = j + self.first
        r = idx - pos[j]
        eta = self.eta.window(int(i.min()), int(i.max()) + 1)
        out = np.where(r % 2 == 1, MINUS, PLUS).astype(np.int8)
        at_kept = r == 0
        out[at_kept] = eta[i[at_kept] - i.min()]
        return out


def insert(eta: Sequence, rule: InsertionRule, check_radius: int = 64) -> Sequence:
    """The insertion ``I_f(eta)``; the rule is validated on ``|i| <= check_radius`` up front."""
    check_rule(eta, rule, -check_radius, check_radius)
    return Sequence(_InsertedSource(eta, rule))


# ---------------------------------------------------------------------------
# collapse


@dataclass
class CollapseWitness:
    """``eta = c(omega)`` together with the rule that re-inserts the removed blocks."""

    omega: Sequence
    eta: Sequence
    rule: InsertionRule
    kept: _KeptIndex = field(repr=False)

    def kept_index(self, i: int) -> int:
        return self.kept.k(i)

    def kept_indices(self, lo: int, hi: int) -> np.ndarray:
        return self.kept.ks(lo, hi)


def collapse(
    omega: Sequence,
    horizon: int = DEFAULT_HORIZON,
    max_horizon: int | None = None,
    max_gap: int | None = None,
) -> CollapseWitness:
    """``c(omega)`` with ``c(omega)_i = omega_{k_i}``.

    Unboundedness is checked on ``±horizon``, doubling up to ``max_horizon``.
    """
    h = horizon
    top = max_horizon or horizon
    while True:
        col = collapsibility(omega, h)
        if not col.zero:
            raise NotZeroCollapsible("omega_{-1} omega_0 or omega_0 omega_1 is −+")
        if col.unbounded.kind == "yes":
            break
        if h >= top:
            raise HorizonExhausted(f"unbounded-collapsibility not witnessed: {col.unbounded}")
        h *= 2
    kept = _KeptIndex(omega, max_gap or max(h, DEFAULT_HORIZON))
    return CollapseWitness(omega, Sequence(_CollapsedSource(kept)), InsertionRule.from_kept(kept), kept)


def rho(state: State, horizon: int = DEFAULT_HORIZON, max_horizon: int = MAX_HORIZON) -> State:
    """Collapse both sequences; the normal is unchanged."""
    w = _collapse_component(state.omega, "omega", horizon, max_horizon)
    wp = _collapse_component(state.omega_prime, "omega_prime", horizon, max_horizon)
    return State(w.eta, wp.eta, state.v)


def rho_with_witnesses(state: State, horizon: int = DEFAULT_HORIZON, max_horizon: int = MAX_HORIZON):
    w = _collapse_component(state.omega, "omega", horizon, max_horizon)
    wp = _collapse_component(state.omega_prime, "omega_prime", horizon, max_horizon)
    return State(w.eta, wp.eta, state.v), w, wp


def _collapse_component(seq, name, horizon, max_horizon) -> CollapseWitness:
    try:
        return collapse(seq, horizon, max_horizon)
    except NotZeroCollapsible as exc:
        raise NotRenormalizable(name, f"not zero-collapsible ({exc})") from exc
    except HorizonExhausted as exc:
        raise NotRenormalizable(name, f"horizon exhausted ({exc})") from exc


def in_r1(state: State, horizon: int = DEFAULT_HORIZON) -> bool:
    return collapsibility(state.omega, horizon).collapsible and collapsibility(
        state.omega_prime, horizon
    ).collapsible


# ---------------------------------------------------------------------------
# first returns


@dataclass(frozen=True)
class Return:
    state: State
    return_time: int
    step_counts: tuple[int, ...]


def _walk_to_kept(state: State, budget: int, min_steps: int = 1) -> Return:
    """Follow the curve until both coordinates are kept, after at least ``min_steps`` steps."""
    w, wp = state.omega, state.omega_prime
    a, b = state.v
    x = y = 0
    counts = [0] * 6
    for m in range(1, budget + 1):
        s = w.at(x) * wp.at(y)
        na, nb = s * b, s * a
        if na:
            u, t = (w.at(x), w.at(x + 1)) if na == 1 else (w.at(x - 1), w.at(x))
            c = _pair_class(u, t)
        else:
            u, t = (wp.at(y), wp.at(y + 1)) if nb == 1 else (wp.at(y - 1), wp.at(y))
            c = 3 + _pair_class(u, t)
        counts[c - 1] += 1
        x += na
        y += nb
        a, b = na, nb
        if m == 4 and x == 0 and y == 0 and (a, b) == state.v:
            raise P4Detected("orbit closed after 4 steps")
        if m >= min_steps and is_kept(w, x) and is_kept(wp, y):
            return Return(state.moved(x, y, (a, b)), m, tuple(counts))
    raise BudgetExhausted(f"no return within {budget} steps")


def _pair_class(u: int, t: int) -> int:
    if u == MINUS and t == PLUS:
        return 1
    if u == PLUS and t == MINUS:
        return 2
    return 3


def first_return(state: State, budget: int = 10**6) -> tuple[State, int]:
    """``(Phi_R(state), return time)`` for a state whose components are zero-collapsible."""
    r = first_return_full(state, budget)
    return r.state, r.return_time


def first_return_full(state: State, budget: int = 10**6) -> Return:
    if not (is_kept(state.omega, 0) and is_kept(state.omega_prime, 0)):
        raise NotRenormalizable(
            "omega" if not is_kept(state.omega, 0) else "omega_prime", "not zero-collapsible"
        )
    return _walk_to_kept(state, budget)


def collapsed_step_counts(state: State, budget: int = 10**6) -> tuple[int, ...]:
    """Step classes over ``x, Phi x, ..., Phi^{ret-1} x`` (one full return block)."""
    return first_return_full(state, budget).step_counts


def predicted_return_time(state: State, rule: InsertionRule, rule_prime: InsertionRule) -> int:
    """``2 * len(f(.)) + 1`` with the insertion slot picked by the outgoing direction."""
    da, db = outgoing(state)
    if da == 1:
        n = rule(0)
    elif da == -1:
        n = rule(-1)
    elif db == 1:
        n = rule_prime(0)
    else:
        n = rule_prime(-1)
    return 2 * (2 * n) + 1


# ---------------------------------------------------------------------------
# repeated renormalization


RENORMALIZED = "renormalized"
P4 = "p4"
NOT_UNBOUNDED = "not_unbounded_collapsible"
HORIZON = "horizon_exhausted"
BUDGET = "budget_exhausted"


@dataclass
class LevelOutcome:
    level: int
    outcome: str
    steps_to_r1: int | None = None
    return_time: int | None = None
    windows: tuple[tuple[int, int], tuple[int, int]] | None = None
    period: int | None = None

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "outcome": self.outcome,
            "steps_to_r1": self.steps_to_r1,
            "return_time": self.return_time,
            "windows": [list(w) for w in self.windows] if self.windows else None,
            "period": self.period,
        }


def _window_of(seq: Sequence) -> tuple[int, int]:
    lo, hi = seq.source.realized
    return (lo - seq.offset, hi - seq.offset)


def repeated_renormalize(
    state: State,
    depth: int,
    horizon: int = DEFAULT_HORIZON,
    budget: int = 10**5,
    track_period: bool = False,
) -> list[LevelOutcome]:
    """Move along the orbit into R_1 and collapse, up to ``depth`` times.

    The last entry is the terminal outcome unless all ``depth`` levels
    renormalized.  With ``track_period`` each level also records the period
    of its curve (``None`` when open within ``budget``).
    """
    out: list[LevelOutcome] = []
    x = state
    for level in range(depth + 1):
        period = None
        if track_period:
            res = trace(x, budget, record=False)
            period = res.period
        if is_period4(x):
            out.append(LevelOutcome(level, P4, windows=(_window_of(x.omega), _window_of(x.omega_prime)), period=period))
            return out
        if level == depth:
            break
        try:
            if is_kept(x.omega, 0) and is_kept(x.omega_prime, 0):
                start, m = x, 0
            else:
                r = _walk_to_kept(x, budget)
                start, m = r.state, r.return_time
        except BudgetExhausted:
            out.append(LevelOutcome(level, BUDGET, period=period))
            return out
        cw = collapsibility(start.omega, horizon)
        cwp = collapsibility(start.omega_prime, horizon)
        if not (cw.collapsible and cwp.collapsible):
            out.append(LevelOutcome(level, NOT_UNBOUNDED, steps_to_r1=m, period=period))
            return out
        try:
            ret = first_return_full(start, budget).return_time
        except (BudgetExhausted, P4Detected):
            ret = None
        try:
            nxt = rho(start, horizon, horizon)
        except NotRenormalizable:
            out.append(LevelOutcome(level, HORIZON, steps_to_r1=m, period=period))
            return out
        out.append(
            LevelOutcome(
                level,
                RENORMALIZED,
                steps_to_r1=m,
                return_time=ret,
                windows=(_window_of(start.omega), _window_of(start.omega_prime)),
                period=period,
            )
        )
        x = nxt
    return out


def renormalization_report(runs: list[list[LevelOutcome]]) -> dict:
    """Aggregate per-level outcome tags, return-time histograms and window sizes."""
    levels: dict[int, dict] = {}
    for run in runs:
        for lv in run:
            d = levels.setdefault(lv.level, {"outcomes": Counter(), "return_times": Counter(), "window_sizes": []})
            d["outcomes"][lv.outcome] += 1
            if lv.return_time is not None:
                d["return_times"][lv.return_time] += 1
            if lv.windows:
                d["window_sizes"].append(max(hi - lo for lo, hi in lv.windows))
    rows = []
    for level in sorted(levels):
        d = levels[level]
        ws = d["window_sizes"]
        rows.append(
            {
                "level": level,
                "outcomes": dict(sorted(d["outcomes"].items())),
                "return_time_histogram": {str(k): v for k, v in sorted(d["return_times"].items())},
                "max_window": max(ws) if ws else None,
                "mean_window": float(np.mean(ws)) if ws else None,
            }
        )
    return {"runs": len(runs), "levels": rows}
