"""The tiling of a pair of sequences and the curve-following map on it.

A point of the system is a :class:`State` ``(omega, omega', v)``.  The tile at
``(m, n)`` is ``T_s`` with ``s = omega_m * omega'_n``; a curve enters the
square at the origin through the edge whose inward normal is ``v`` and leaves
it with outward direction ``v' = s * (b, a)``.  :func:`phi` translates the
tiling so that the next square sits at the origin.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .sequences import Sequence

E = (1, 0)
W = (-1, 0)
N = (0, 1)
S = (0, -1)
NORMALS = (E, N, W, S)


def check_normal(v) -> tuple[int, int]:
    v = (int(v[0]), int(v[1]))
    if v not in NORMALS:
        raise ValueError(f"not an inward normal: {v!r}")
    return v


class StepClass(enum.IntEnum):
    NEG_POS_HORIZONTAL = 1
    POS_NEG_HORIZONTAL = 2
    MATCHING_HORIZONTAL = 3
    NEG_POS_VERTICAL = 4
    POS_NEG_VERTICAL = 5
    MATCHING_VERTICAL = 6


def _word_class(u: int, t: int) -> int:
    if (u, t) == (-1, 1):
        return 1
    if (u, t) == (1, -1):
        return 2
    return 3


@dataclass(frozen=True)
class State:
    omega: Sequence
    omega_prime: Sequence
    v: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "v", check_normal(self.v))

    def same_as(self, other: "State", radius: int = 32) -> bool:
        """Extensional equality on indices ``-radius..radius``."""
        return (
            self.v == other.v
            and self.omega.equals_on(other.omega, -radius, radius + 1)
            and self.omega_prime.equals_on(other.omega_prime, -radius, radius + 1)
        )

    def moved(self, dx: int, dy: int, v) -> "State":
        return State(self.omega.shift(dx), self.omega_prime.shift(dy), v)


def tile_at(omega: Sequence, omega_prime: Sequence, m: int, n: int) -> int:
    return omega.at(m) * omega_prime.at(n)


def phi(state: State) -> State:
    s = state.omega.at(0) * state.omega_prime.at(0)
    a, b = state.v
    return State(state.omega.shift(s * b), state.omega_prime.shift(s * a), (s * b, s * a))


def phi_inverse(state: State) -> State:
    a, b = state.v
    s = state.omega.at(-a) * state.omega_prime.at(-b)
    return State(state.omega.shift(-a), state.omega_prime.shift(-b), (s * b, s * a))


def invariant_m(state: State) -> int:
    """``b * omega_0 + a * omega'_0``, constant along orbits."""
    a, b = state.v
    return b * state.omega.at(0) + a * state.omega_prime.at(0)


def outgoing(state: State) -> tuple[int, int]:
    """Direction ``v'`` in which the curve leaves the square at the origin."""
    s = state.omega.at(0) * state.omega_prime.at(0)
    a, b = state.v
    return (s * b, s * a)


def step_class(state: State) -> StepClass:
    da, db = outgoing(state)
    if da:
        w = state.omega
        word = (w.at(0), w.at(1)) if da == 1 else (w.at(-1), w.at(0))
        return StepClass(_word_class(*word))
    w = state.omega_prime
    word = (w.at(0), w.at(1)) if db == 1 else (w.at(-1), w.at(0))
    return StepClass(3 + _word_class(*word))


def step_classes(omega_win: np.ndarray, omega_prime_win: np.ndarray, va, vb) -> np.ndarray:
    """Vectorized :func:`step_class` over rows of 3-wide windows ``omega_{-1..1}``."""
    w = np.asarray(omega_win, dtype=np.int64)
    wp = np.asarray(omega_prime_win, dtype=np.int64)
    va = np.asarray(va, dtype=np.int64)
    vb = np.asarray(vb, dtype=np.int64)
    s = w[:, 1] * wp[:, 1]
    da, db = s * vb, s * va
    hu = np.where(da == 1, w[:, 1], w[:, 0])
    ht = np.where(da == 1, w[:, 2], w[:, 1])
    vu = np.where(db == 1, wp[:, 1], wp[:, 0])
    vt = np.where(db == 1, wp[:, 2], wp[:, 1])
    u = np.where(da != 0, hu, vu)
    t = np.where(da != 0, ht, vt)
    cls = np.where((u == -1) & (t == 1), 1, np.where((u == 1) & (t == -1), 2, 3))
    return np.where(da != 0, cls, cls + 3).astype(np.int8)


class TraceStatus(str, enum.Enum):
    CLOSED = "closed"
    OPEN_AT_BUDGET = "open_at_budget"


@dataclass
class TraceResult:
    """Outcome of following the curve through a state.

    ``visited[k]`` is the centre of the ``k``-th square in the frame of the
    starting square, ``displacement[k]`` the partial sum of the first ``k + 1``
    normals, ``normals[k]`` the inward normal on entering ``visited[k]`` and
    ``classes[k]`` the step class of that step.  The arrays are empty when the
    trace ran with ``record=False``.
    """

    status: TraceStatus
    steps: int
    period: int | None
    step_counts: tuple[int, ...]
    final_normal: tuple[int, int]
    visited: np.ndarray = field(repr=False)
    displacement: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    classes: np.ndarray = field(repr=False)
    extremes: tuple[int, int, int, int] = (0, 0, 0, 0)

    @property
    def closed(self) -> bool:
        return self.status is TraceStatus.CLOSED

    def to_record(self) -> dict:
        """Flat record for CSV/JSON export."""
        xmin, xmax, ymin, ymax = self.extremes
        rec = {"status": self.status.value, "period": self.period, "steps": self.steps}
        for i, c in enumerate(self.step_counts, start=1):
            rec[f"class_{i}"] = int(c)
        rec.update(x_min=xmin, x_max=xmax, y_min=ymin, y_max=ymax)
        return rec


_INITIAL_RADIUS = 64


def trace(state: State, budget: int, record: bool = True) -> TraceResult:
    """Apply :func:`phi` up to ``budget`` times, stopping when the curve closes.

    A curve is closed at the first ``n`` where the displacement returns to
    ``(0, 0)`` together with the starting normal.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    va0, vb0 = state.v
    st = np.array([0, 0, va0, vb0, 0, 0, 0, 0, 0], dtype=np.int64)
    counts = np.zeros(6, dtype=np.int64)
    cap = budget if record else 0
    rec_xy = np.zeros((cap, 2), dtype=np.int64)
    rec_v = np.zeros((cap, 2), dtype=np.int64)
    rec_c = np.zeros(cap, dtype=np.int8)
    r = min(_INITIAL_RADIUS, budget + 2)
    lo_x, hi_x, lo_y, hi_y = -r, r, -r, r
    while True:
        w = state.omega.window(lo_x, hi_x + 1)
        wp = state.omega_prime.window(lo_y, hi_y + 1)
        status = _kernels.trace_kernel(
            w, lo_x, wp, lo_y, st, va0, vb0, budget, counts, rec_xy, rec_v, rec_c, record
        )
        if status != _kernels.NEED_WINDOW:
            break
        x, y = int(st[0]), int(st[1])
        if x - 1 < lo_x:
            lo_x -= hi_x - lo_x
        if x + 1 > hi_x:
            hi_x += hi_x - lo_x
        if y - 1 < lo_y:
            lo_y -= hi_y - lo_y
        if y + 1 > hi_y:
            hi_y += hi_y - lo_y
    steps = int(st[4])
    closed = status == _kernels.CLOSED
    if record:
        visited = rec_xy[:steps].copy()
        normals = rec_v[:steps].copy()
        classes = rec_c[:steps] + 1
        disp = np.empty_like(visited)
        disp[:-1] = visited[1:]
        if steps:
            disp[-1] = (st[0], st[1])
    else:
        visited = disp = normals = np.zeros((0, 2), dtype=np.int64)
        classes = np.zeros(0, dtype=np.int8)
    return TraceResult(
        status=TraceStatus.CLOSED if closed else TraceStatus.OPEN_AT_BUDGET,
        steps=steps,
        period=steps if closed else None,
        step_counts=tuple(int(c) for c in counts),
        final_normal=(int(st[2]), int(st[3])),
        visited=visited,
        displacement=disp,
        normals=normals,
        classes=classes,
        extremes=(int(st[5]), int(st[6]), int(st[7]), int(st[8])),
    )


def is_period4(state: State) -> bool:
    res = trace(state, 4, record=False)
    return res.closed and res.period == 4
