"""Seeded Monte Carlo estimates compared against the exact formulas.

Sample ``i`` of an experiment with seed ``s`` uses child seeds derived from
``(s, i)`` by counter, so results do not depend on chunking or on how many
samples were requested before.  Most experiments read fixed windows in
batches and fall back to lazy sequences (with identical symbols) for the rare
rows whose curve or kept-index scan leaves the window.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _keyed, _kernels, cocycle
from .collapse import (
    CollapseError,
    collapse,
    collapsibility,
    first_return_full,
    predicted_return_time,
    rho_with_witnesses,
)
from .dynamics import NORMALS, State, step_class, step_classes
from .sequences import (
    MINUS,
    PLUS,
    CylinderPattern,
    Sequence,
    bernoulli_sequence,
    bernoulli_windows,
    cylinder_measure,
    degenerate_markov,
    markov_windows,
    sample_markov,
    word_str,
    _markov_origin,
)

_OMEGA_STREAM = 8
_OMEGA_PRIME_STREAM = 9
_CHUNK = 50_000


@dataclass(frozen=True)
class Estimate:
    """A point estimate with its standard error.

    ``kind`` is ``"proportion"`` (binomial standard error) or ``"mean"``
    (sample standard error).
    """

    value: float
    stderr: float
    n_samples: int
    seed: int
    kind: str = "proportion"

    @classmethod
    def proportion(cls, hits: int, n: int, seed: int) -> "Estimate":
        v = hits / n if n else float("nan")
        se = math.sqrt(v * (1 - v) / n) if n else float("nan")
        return cls(v, se, n, seed, "proportion")

    @classmethod
    def mean(cls, xs, seed: int) -> "Estimate":
        xs = np.asarray(xs, dtype=float)
        n = len(xs)
        if n == 0:
            return cls(float("nan"), float("nan"), 0, seed, "mean")
        se = float(xs.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
        return cls(float(xs.mean()), se, n, seed, "mean")

    def wilson(self, z: float = 1.96) -> tuple[float, float]:
        """Wilson score interval for a proportion."""
        n, v = self.n_samples, self.value
        centre = (v + z * z / (2 * n)) / (1 + z * z / n)
        half = z / (1 + z * z / n) * math.sqrt(v * (1 - v) / n + z * z / (4 * n * n))
        return centre - half, centre + half

    def sigma_for(self, target: float) -> float:
        """Standard deviation used for a z-score against ``target``.

        Proportions use the binomial deviation under the target itself, so
        an empirical 0 against a target of 0 is not a division by zero.
        """
        if self.kind == "proportion":
            return math.sqrt(target * (1 - target) / self.n_samples) if self.n_samples else float("nan")
        return self.stderr

    def z(self, target: float) -> float:
        sig = self.sigma_for(target)
        diff = self.value - target
        if sig == 0 or math.isnan(sig):
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / sig


@dataclass
class Report:
    experiment: str
    params: dict
    seed: int
    n: int
    labels: list[str]
    estimates: list[Estimate]
    analytic: list
    sigma_level: float
    extra: dict = field(default_factory=dict)

    @property
    def z_scores(self) -> list:
        return [None if a is None else e.z(float(a)) for e, a in zip(self.estimates, self.analytic)]

    def passed(self, sigma: float | None = None) -> bool:
        lim = self.sigma_level if sigma is None else sigma
        return all(z is None or abs(z) <= lim for z in self.z_scores)

    def get(self, label: str) -> tuple[Estimate, object, float | None]:
        i = self.labels.index(label)
        return self.estimates[i], self.analytic[i], self.z_scores[i]

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "seed": self.seed,
            "n": self.n,
            "sigma_level": self.sigma_level,
            "estimates": [
                {"label": lab, **asdict(e), "sigma": e.sigma_for(float(a)) if a is not None else e.stderr}
                for lab, e, a in zip(self.labels, self.estimates, self.analytic)
            ],
            "analytic": [None if a is None else float(a) for a in self.analytic],
            "z_scores": self.z_scores,
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _sigma_level(comparisons: int) -> float:
    return 4.0 if comparisons >= 6 else 3.0


# ---------------------------------------------------------------------------
# sampling states


@dataclass(frozen=True)
class MeasureSpec:
    """Law of ``(omega, omega')``; normals are always uniform.

    ``kind`` is ``"markov"`` (``mu_p x mu_q``), ``"bernoulli"`` (independent
    symbols, ``+`` with probability ``p`` resp. ``q``) or ``"constant"``
    (each component a constant of random sign).
    """

    kind: str = "markov"
    p: float = 0.5
    q: float = 0.5

    def __post_init__(self):
        if self.kind not in ("markov", "bernoulli", "constant"):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == "markov" and not (0 < self.p < 1 and 0 < self.q < 1):
            raise ValueError("Markov persistence parameters must lie in (0, 1)")
        if self.kind == "bernoulli" and not (0 <= self.p <= 1 and 0 <= self.q <= 1):
            raise ValueError("Bernoulli parameters must lie in [0, 1]")

    def _one(self, r: float, seed) -> Sequence:
        if self.kind == "markov":
            return sample_markov(r, seed)
        if self.kind == "bernoulli":
            return bernoulli_sequence(r, seed)
        return degenerate_markov(1, seed)

    def _rows(self, r: float, seeds, start: int, stop: int) -> np.ndarray:
        if self.kind == "markov":
            return markov_windows(r, seeds, start, stop)
        if self.kind == "bernoulli":
            return bernoulli_windows(r, seeds, start, stop)
        return np.repeat(markov_windows(0.5, seeds, 0, 1), stop - start, axis=1)

    def to_dict(self) -> dict:
        return asdict(self)


def _child_seeds(seed: int, lo: int, hi: int):
    idx = np.arange(lo, hi, dtype=np.int64)
    sw = _keyed.raw(_keyed.stream_key(seed, _OMEGA_STREAM), idx)
    swp = _keyed.raw(_keyed.stream_key(seed, _OMEGA_PRIME_STREAM), idx)
    nv = np.minimum((_keyed.uniform(_keyed.stream_key(seed, _keyed.NORMAL), idx) * 4).astype(np.int64), 3)
    return sw, swp, nv


def sample_state(spec: MeasureSpec, seed: int, i: int) -> State:
    """Sample ``i`` of the experiment seeded with ``seed``."""
    sw, swp, nv = _child_seeds(seed, i, i + 1)
    return State(spec._one(spec.p, sw[0]), spec._one(spec.q, swp[0]), NORMALS[int(nv[0])])


def sample_states(spec: MeasureSpec, seed: int, n: int):
    for i in range(n):
        yield sample_state(spec, seed, i)


def _normal_arrays(nv):
    normals = np.array(NORMALS, dtype=np.int64)
    return normals[nv, 0], normals[nv, 1]


def _chunks(n: int, size: int = _CHUNK):
    for lo in range(0, n, size):
        yield lo, min(n, lo + size)


# ---------------------------------------------------------------------------
# closure


def _stream_args(kind: str, seeds: np.ndarray):
    """Key table and origin symbols that let the tracing kernel generate a sequence itself."""
    if kind == "bernoulli":
        k1, k2 = _keyed.stream_key(seeds, _keyed.BERNOULLI)
        return np.stack([k1, k2, k1, k2], axis=1), np.zeros(len(seeds), dtype=np.int8)
    r1, r2 = _keyed.stream_key(seeds, _keyed.RIGHT)
    l1, l2 = _keyed.stream_key(seeds, _keyed.LEFT)
    return np.stack([r1, r2, l1, l2], axis=1), _markov_origin(seeds)


def closure_periods(spec: MeasureSpec, budget: int, samples: int, seed: int) -> np.ndarray:
    """Period of each sampled curve within ``budget`` steps (0 when still open)."""
    kind = _kernels.BERNOULLI if spec.kind == "bernoulli" else _kernels.MARKOV
    # the constant measure is the Markov chain that never changes sign
    p, q = (1.0, 1.0) if spec.kind == "constant" else (spec.p, spec.q)
    out = np.zeros(samples, dtype=np.int64)
    for lo, hi in _chunks(samples):
        sw, swp, nv = _child_seeds(seed, lo, hi)
        keys, origin = _stream_args(spec.kind, sw)
        keys_p, origin_p = _stream_args(spec.kind, swp)
        va, vb = _normal_arrays(nv)
        out[lo:hi] = _kernels.stream_trace(kind, p, q, keys, keys_p, origin, origin_p, va, vb, budget)
    return out


def estimate_closed_fraction(spec: MeasureSpec, budget: int, samples: int, seed: int) -> Estimate:
    """Fraction of curves closed within ``budget`` steps, a lower bound on the closed probability."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    periods = closure_periods(spec, budget, samples, seed)
    return Estimate.proportion(int(np.count_nonzero(periods)), samples, seed)


def closed_fraction_report(spec: MeasureSpec, budgets, samples: int, seed: int) -> Report:
    """Closed fractions over several budgets, with independent samples per budget."""
    budgets = list(budgets)
    seeds = [int(s) for s in _keyed.derive_seeds(seed, len(budgets))]
    ests = [estimate_closed_fraction(spec, b, samples, s) for b, s in zip(budgets, seeds)]
    bound = None
    if spec.kind == "bernoulli":
        bound = 1 - cocycle.drift_lower_bound(2 * spec.p - 1, 2 * spec.q - 1)
    return Report(
        "closed",
        {**spec.to_dict(), "budgets": budgets, "samples": samples},
        seed,
        samples * len(budgets),
        [f"closed@{b}" for b in budgets],
        ests,
        [None] * len(budgets),
        _sigma_level(len(budgets)),
        {"budget_seeds": seeds, "closed_upper_bound": bound},
    )


# ---------------------------------------------------------------------------
# transport under collapse


_TRANSPORT_RADIUS = 32


def _collapse_rows(W: np.ndarray, r: int):
    """Kept-index data for rows of windows over ``[-r-1, r+2)``.

    Returns ``(zero, ok, k1, k2)``: zero-collapsibility, whether both far
    witnesses and the first two positive kept indices lie in the window, and
    those two indices.
    """
    w = W.astype(np.int8)
    starts = (w[:, 1:-1] == MINUS) & (w[:, 2:] == PLUS)
    ends = (w[:, :-2] == MINUS) & (w[:, 1:-1] == PLUS)
    kept = ~(starts | ends)  # column c is index c - r
    zero = kept[:, r]
    pos = kept[:, r + 1 :]
    cum = np.cumsum(pos, axis=1)
    has2 = cum[:, -1] >= 2
    k1 = np.argmax(pos, axis=1) + 1
    k2 = np.argmax(cum >= 2, axis=1) + 1
    right_far = pos[:, r // 2 - 1 :].any(axis=1)
    left_far = kept[:, : r // 2 + 1].any(axis=1)
    ok = has2 & right_far & left_far
    return zero, ok, k1, k2


def estimate_transport(p: float, samples: int, seed: int) -> Report:
    """Collapsible fraction, collapsed-cylinder frequencies and insertion means.

    Cylinders of ``c(omega)`` are read on indices ``0..L-1`` for ``L = 1, 2, 3``
    among collapsible samples; insertion means are of ``n_0`` conditioned on
    the collapsed pair ``c_0 c_1``.
    """
    q = 1 / (2 - p)
    r = _TRANSPORT_RADIUS
    collapsible = 0
    triples = Counter()
    ins_sum = Counter()
    ins_sq = Counter()
    fallback = 0
    for lo, hi in _chunks(samples, 100_000):
        sw = _keyed.raw(_keyed.stream_key(seed, _OMEGA_STREAM), np.arange(lo, hi, dtype=np.int64))
        W = markov_windows(p, sw, -r - 1, r + 2)
        zero, ok, k1, k2 = _collapse_rows(W, r)
        fast = zero & ok
        rows = np.flatnonzero(fast)
        c0 = W[rows, r + 1]
        c1 = W[rows, r + 1 + k1[rows]]
        c2 = W[rows, r + 1 + k2[rows]]
        n0 = (k1[rows] - 1) // 2
        code = (c0 > 0) * 4 + (c1 > 0) * 2 + (c2 > 0)
        for c, cnt in zip(*np.unique(code, return_counts=True)):
            triples[int(c)] += int(cnt)
        pair = (c0 > 0) * 2 + (c1 > 0)
        for c in range(4):
            sel = n0[pair == c]
            ins_sum[c] += int(sel.sum())
            ins_sq[c] += int((sel.astype(np.int64) ** 2).sum())
            ins_sum[("n", c)] += len(sel)
        collapsible += len(rows)
        for j in np.flatnonzero(zero & ~ok):
            fallback += 1
            omega = sample_markov(p, sw[j])
            try:
                cw = collapse(omega, 256, 2**14)
            except CollapseError:
                continue
            collapsible += 1
            s0, s1, s2 = cw.eta.window(0, 3)
            triples[(s0 > 0) * 4 + (s1 > 0) * 2 + int(s2 > 0)] += 1
            n = cw.rule(0)
            c = (s0 > 0) * 2 + int(s1 > 0)
            ins_sum[c] += n
            ins_sq[c] += n * n
            ins_sum[("n", c)] += 1

    labels, ests, targets = [], [], []
    labels.append("collapsible")
    ests.append(Estimate.proportion(collapsible, samples, seed))
    targets.append(p)

    def sym(bit):
        return PLUS if bit else MINUS

    for length in (1, 2, 3):
        for code in range(2**length):
            word = tuple(sym((code >> (length - 1 - b)) & 1) for b in range(length))
            hits = sum(cnt for t, cnt in triples.items() if t >> (3 - length) == code)
            pat = CylinderPattern(0, length - 1, word)
            labels.append(f"cyl[{pat}]")
            ests.append(Estimate.proportion(hits, collapsible, seed))
            targets.append(cylinder_measure(q, pat))
    match = sum(cnt for t, cnt in triples.items() if ((t >> 2) & 1) == ((t >> 1) & 1))
    labels.append("collapsed_match")
    ests.append(Estimate.proportion(match, collapsible, seed))
    targets.append(q)
    for c in range(4):
        u, t = sym(c >> 1), sym(c & 1)
        n = ins_sum[("n", c)]
        mean = ins_sum[c] / n if n else float("nan")
        var = (ins_sq[c] - n * mean * mean) / (n - 1) if n > 1 else float("nan")
        labels.append(f"insertion[{word_str((u, t))}]")
        ests.append(Estimate(mean, math.sqrt(var / n) if n > 1 else float("nan"), n, seed, "mean"))
        targets.append(cocycle.expected_insertion(p, u, t))
    return Report(
        "transport",
        {"p": p, "q": q, "samples": samples},
        seed,
        samples,
        labels,
        ests,
        targets,
        _sigma_level(len(labels)),
        {"lazy_fallback_rows": fallback},
    )


# ---------------------------------------------------------------------------
# step classes and period-4 loops


def _class_counts(p: float, q: float, samples: int, seed: int, budget4: bool):
    spec = MeasureSpec("markov", p, q)
    counts = np.zeros(6, dtype=np.int64)
    joint = np.zeros(6, dtype=np.int64)
    for lo, hi in _chunks(samples, 200_000):
        sw, swp, nv = _child_seeds(seed, lo, hi)
        va, vb = _normal_arrays(nv)
        if budget4:
            W = spec._rows(p, sw, -3, 4)
            WP = spec._rows(q, swp, -3, 4)
            period, first = _kernels.batch_trace(W, WP, 3, va, vb, 4)
            cls = first.astype(np.int64) + 1
            joint += np.bincount(cls[period == 4], minlength=7)[1:]
        else:
            W = spec._rows(p, sw, -1, 2)
            WP = spec._rows(q, swp, -1, 2)
            cls = step_classes(W, WP, va, vb).astype(np.int64)
        counts += np.bincount(cls, minlength=7)[1:]
    return counts, joint


def estimate_step_measures(p: float, q: float, samples: int, seed: int) -> Report:
    counts, _ = _class_counts(p, q, samples, seed, False)
    target = cocycle.step_measure_vector(p, q)
    return Report(
        "steps",
        {"p": p, "q": q, "samples": samples},
        seed,
        samples,
        [f"S{j}" for j in range(1, 7)],
        [Estimate.proportion(int(c), samples, seed) for c in counts],
        [float(t) for t in target],
        _sigma_level(6),
        {"counts": [int(c) for c in counts]},
    )


def estimate_p4_joint(p: float, q: float, samples: int, seed: int) -> Report:
    """Frequencies of ``(first step class = j, period 4)``."""
    _, joint = _class_counts(p, q, samples, seed, True)
    target = cocycle.p4_class_probabilities(p, q)
    return Report(
        "p4",
        {"p": p, "q": q, "samples": samples},
        seed,
        samples,
        [f"S{j}&P4" for j in range(1, 7)],
        [Estimate.proportion(int(c), samples, seed) for c in joint],
        [float(t) for t in target],
        _sigma_level(6),
        {"counts": [int(c) for c in joint]},
    )


# ---------------------------------------------------------------------------
# return times


def estimate_return_times(p: float, q: float, samples: int, seed: int, budget: int = 10**5, horizon: int = 256) -> Report:
    """Return times to R_1 grouped by the step class of the renormalized state.

    Samples outside R_1 are skipped.  ``extra`` holds the histogram and the
    number of returns violating the branch table or the block-count rows.
    """
    spec = MeasureSpec("markov", p, q)
    by_class: dict[int, list[int]] = {j: [] for j in range(1, 7)}
    hist = Counter()
    bad_mod = bad_pred = bad_rows = 0
    in_r1 = 0
    for i in range(samples):
        x = sample_state(spec, seed, i)
        if not (collapsibility(x.omega, horizon).collapsible and collapsibility(x.omega_prime, horizon).collapsible):
            continue
        try:
            y, w, wp = rho_with_witnesses(x, horizon)
            ret = first_return_full(x, budget)
        except CollapseError:
            continue
        in_r1 += 1
        j = int(step_class(y))
        t = ret.return_time
        m = (t - 1) // 4
        bad_mod += t % 4 != 1
        bad_pred += t != predicted_return_time(x, w.rule, wp.rule)
        bad_rows += ret.step_counts != cocycle.block_counts(j, m)
        by_class[j].append(t)
        hist[(j, t)] += 1
    mvec = cocycle.insertion_vector(p, q)
    return Report(
        "returns",
        {"p": p, "q": q, "samples": samples, "budget": budget, "horizon": horizon},
        seed,
        samples,
        [f"ret|S{j}" for j in range(1, 7)],
        [Estimate.mean(by_class[j], seed) for j in range(1, 7)],
        [4 * float(mvec[j - 1]) + 1 for j in range(1, 7)],
        _sigma_level(6),
        {
            "in_r1": in_r1,
            "histogram": {f"S{j}:{t}": c for (j, t), c in sorted(hist.items())},
            "violations": {"mod4": bad_mod, "branch_table": bad_pred, "block_rows": bad_rows},
        },
    )
