"""Exact measure formulas: transport under collapse, step measures and cocycles.

Every function accepts :class:`fractions.Fraction` (or ``int``) arguments and
then computes exactly; float arguments give float results.  Matrices are
numpy arrays, of ``dtype=object`` in the exact case.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence as Seq

import numpy as np

from .sequences import MINUS, PLUS, CylinderPattern, cylinder_measure

Number = "int | float | Fraction"


def _exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in xs)


def _one(*xs):
    return Fraction(1) if _exact(*xs) else 1.0


def _array(rows) -> np.ndarray:
    flat = [x for r in rows for x in (r if isinstance(r, (list, tuple)) else [r])]
    dtype = object if any(isinstance(x, Fraction) for x in flat) else float
    return np.array(rows, dtype=dtype)


def p_of(m):
    """Matching probability ``m / (m + 1)`` indexed by the number of collapses."""
    return Fraction(m, m + 1) if isinstance(m, int) else m / (m + 1)


def transport_q(p):
    """Parameter of the collapsed chain: ``mu_p`` pushed through collapse is ``p * mu_q``."""
    return _one(p) / (2 - p)


def insertion_ratio(p):
    """``(1-p)^2 / (p (2-p))``, the expected number of ``(−+)`` blocks beyond the forced one."""
    one = _one(p)
    return one * (1 - p) ** 2 / (p * (2 - p))


def expected_insertion(p, u: int, t: int):
    """Mean of ``n_0`` given collapsed symbols ``c_0 c_1 = u t`` (``q = 1/(2-p)``)."""
    base = insertion_ratio(p)
    return base + 1 if (u, t) == (MINUS, PLUS) else base


def step_measure_vector(p, q):
    """``nu(S_1), ..., nu(S_6)`` for ``mu_p x mu_q x uniform`` normals."""
    quarter = _one(p, q) / 4
    half = 2 * quarter
    return _array([(1 - p) * quarter, (1 - p) * quarter, p * half, (1 - q) * quarter, (1 - q) * quarter, q * half])


def cocycle_matrix(m: Seq) -> np.ndarray:
    """Row ``j`` counts steps of each class over a return block whose collapsed step is class ``j``.

    With every ``m_j`` equal to an integer ``m`` this is the exact block
    count for return time ``4m + 1``; with expected insertions it is the
    conditional expectation.
    """
    m1, m2, m3, m4, m5, m6 = m
    return _array(
        [
            [m1, m1 - 1, 2, 0, 0, 2 * m1],
            [m2, m2 + 1, 0, 0, 0, 2 * m2],
            [m3, m3, 1, 0, 0, 2 * m3],
            [0, 0, 2 * m4, m4, m4 - 1, 2],
            [0, 0, 2 * m5, m5, m5 + 1, 0],
            [0, 0, 2 * m6, m6, m6, 1],
        ]
    )


def block_counts(step: int, m: int) -> tuple[int, ...]:
    """Step counts of a return block of length ``4m + 1`` whose collapsed step has class ``step``."""
    return tuple(int(x) for x in cocycle_matrix([m] * 6)[step - 1])


def insertion_vector(p, q):
    """Expected insertion count for each collapsed step class."""
    cp, cq = insertion_ratio(p), insertion_ratio(q)
    return [1 + cp, cp, cp, 1 + cq, cq, cq]


_BASE = [
    [1, 0, 2, 0, 0, 2],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 2, 1, 0, 2],
    [0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 1],
]
_HORIZONTAL = [[1, 1, 0, 0, 0, 2]] * 3 + [[0] * 6] * 3
_VERTICAL = [[0] * 6] * 3 + [[0, 0, 2, 1, 1, 0]] * 3


def matrix_Mpq(p, q) -> np.ndarray:
    """Expected step-count matrix for states drawn from ``mu_p x mu_q``.

    A fixed integer part plus the insertion ratios of ``p`` and ``q`` times
    a horizontal and a vertical correction.
    """
    cp, cq = insertion_ratio(p), insertion_ratio(q)
    one = _one(p, q)
    return _array(
        [
            [one * b + cp * h + cq * v for b, h, v in zip(rb, rh, rv)]
            for rb, rh, rv in zip(_BASE, _HORIZONTAL, _VERTICAL)
        ]
    )


def nu_On_sequence(m: int, n: int, kmax: int, exact: bool = True) -> list:
    """``nu(O_k)`` for ``k = 0..kmax`` under ``mu_{p(m)} x mu_{p(n)} x uniform``.

    ``O_k`` is the set of states that can be renormalized at least ``k``
    times.  Uses ``nu(O_k) = mn/((m+k)(n+k)) * s_k . (M_{k-1} ... M_0 1)``.
    """
    cast = (lambda a, b: Fraction(a, b)) if exact else (lambda a, b: a / b)
    u = np.array([cast(1, 1)] * 6, dtype=object if exact else float)
    out = []
    for k in range(kmax + 1):
        p, q = cast(m + k, m + k + 1), cast(n + k, n + k + 1)
        s = np.array(step_measure_vector(p, q), dtype=u.dtype)
        out.append(cast(m * n, (m + k) * (n + k)) * s.dot(u))
        u = np.array(matrix_Mpq(p, q), dtype=u.dtype).dot(u)
    return out


def p4_class_probabilities(p, q):
    """``nu(S_j and P_4)`` for ``j = 1..6``.

    A period-4 loop needs a ``−+`` pair in one sequence and a ``+−`` pair in
    the other, read across the origin square.
    """
    neg_pos = cylinder_measure(p, CylinderPattern(0, 1, (MINUS, PLUS)))
    pos_neg = cylinder_measure(p, CylinderPattern(0, 1, (PLUS, MINUS)))
    neg_pos_q = cylinder_measure(q, CylinderPattern(0, 1, (MINUS, PLUS)))
    pos_neg_q = cylinder_measure(q, CylinderPattern(0, 1, (PLUS, MINUS)))
    a = neg_pos * pos_neg_q
    b = pos_neg * neg_pos_q
    return [a, b, 0 * a, b, a, 0 * a]


# ---------------------------------------------------------------------------
# two-dimensional reduction in the symmetric case


def section(a, b):
    """Lift ``(a, b)`` to a six-vector that is symmetric under the step-class involution."""
    return _array([a / 4, a / 4, b / 2, a / 4, a / 4, b / 2])


def projection(v) -> np.ndarray:
    a, b, c, d, e, f = v
    return _array([a + b + d + e, c + f])


def reduced_Nn(n: int, exact: bool = True) -> np.ndarray:
    """``[[1, 2], [0, 1]] + 2/(n(n+2)) [[1, 1], [1, 1]]``."""
    c = Fraction(2, n * (n + 2)) if exact else 2 / (n * (n + 2))
    one = Fraction(1) if exact else 1.0
    return _array([[one + c, 2 * one + c], [c, one + c]])


def _v(k: int, exact: bool):
    return np.array(
        [Fraction(1, k + 1), Fraction(k, k + 1)] if exact else [1 / (k + 1), k / (k + 1)],
        dtype=object if exact else float,
    )


def simp3_partial(k: int, exact: bool = True):
    """``(1+k)^{-2} v_k N_k ... N_1 1`` with ``v_k = (1/(k+1), k/(k+1))``."""
    u = np.array([1, 1], dtype=object if exact else float)
    if exact:
        u = np.array([Fraction(1), Fraction(1)], dtype=object)
    for n in range(1, k + 1):
        u = reduced_Nn(n, exact).dot(u)
    scale = Fraction(1, (1 + k) ** 2) if exact else 1 / (1 + k) ** 2
    return scale * _v(k, exact).dot(u)


def reduced_L11_factor(n: int, exact: bool = True) -> np.ndarray:
    """``(n+2)/(n+4) A + 2/((n+4) n) B`` with ``A = [[1, 2], [0, 1]]`` and ``B`` all ones."""
    if exact:
        a, b = Fraction(n + 2, n + 4), Fraction(2, (n + 4) * n)
    else:
        a, b = (n + 2) / (n + 4), 2 / ((n + 4) * n)
    return _array([[a + b, 2 * a + b], [b, a + b]])


def L11_partial(k: int, exact: bool = True):
    """``(1/12) v_k prod_{n=k..1} ((n+2)/(n+4) A + 2/(n+4) B/n) 1``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    for val in L11_sequence(k, exact):
        pass
    return val


def L11_sequence(kmax: int, exact: bool = True):
    """Yields ``L11_partial(k)`` for ``k = 1..kmax`` in ``O(kmax)`` matrix products."""
    u = np.array([Fraction(1), Fraction(1)] if exact else [1.0, 1.0], dtype=object if exact else float)
    twelfth = Fraction(1, 12) if exact else 1 / 12
    for n in range(1, kmax + 1):
        u = reduced_L11_factor(n, exact).dot(u)
        yield twelfth * _v(n, exact).dot(u)


def gamma_sequence(kmax: int, exact: bool = True) -> list:
    """``gamma_0 = 2``, ``gamma_k = sum_{n<k} 2(n+3)(2k-2n) / (k(k+2)(k+3)) gamma_n``.

    The sum is rewritten as ``4/(k(k+2)(k+3)) (k S1 - S2)`` with running sums
    ``S1 = sum (n+3) gamma_n`` and ``S2 = sum n (n+3) gamma_n``.
    """
    g = [Fraction(2) if exact else 2.0]
    s1 = 3 * g[0]
    s2 = 0 * g[0]
    for k in range(1, kmax + 1):
        if exact:
            gk = Fraction(4, k * (k + 2) * (k + 3)) * (k * s1 - s2)
        else:
            gk = 4.0 / (k * (k + 2) * (k + 3)) * (k * s1 - s2)
        g.append(gk)
        s1 += (k + 3) * gk
        s2 += k * (k + 3) * gk
    return g


def gamma_direct(kmax: int) -> list[Fraction]:
    """The defining ``O(k^2)`` recursion, kept as a cross-check."""
    g = [Fraction(2)]
    for k in range(1, kmax + 1):
        g.append(sum(Fraction(2 * (n + 3) * (2 * k - 2 * n), k * (k + 2) * (k + 3)) * g[n] for n in range(k)))
    return g


def s_k(k: int):
    """``2(k+1)(k+8) / (3(k+2)(k+3))``."""
    return Fraction(2 * (k + 1) * (k + 8), 3 * (k + 2) * (k + 3))


def first_below(values, threshold, start: int = 0) -> int | None:
    """First index ``k >= start`` with ``values[k] < threshold``."""
    for k, v in enumerate(values):
        if k >= start and v < threshold:
            return k
    return None


def drift_lower_bound(p_bar, q_bar):
    """Lower bound ``max(|p_bar|, |q_bar|)`` on the drift of a curve.

    ``p_bar`` and ``q_bar`` are the means of ``omega_0`` and ``omega'_0``.
    """
    if not (-1 <= p_bar <= 1 and -1 <= q_bar <= 1):
        raise ValueError("means must lie in [-1, 1]")
    return max(abs(p_bar), abs(q_bar))
