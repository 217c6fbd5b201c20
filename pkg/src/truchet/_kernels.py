"""Compiled inner loops for following curves.

Positions are displacements ``(x, y)`` from the starting square, so the
sequences of the state after ``k`` steps are ``sigma**x_k omega`` and
``sigma**y_k omega'``; the kernels read ``omega`` and ``omega'`` through fixed
windows and hand control back when the walk reaches the edge of a window.
Step classes are 0-based here (0..5).
"""

from __future__ import annotations

import numba
import numpy as np

CLOSED = 0
BUDGET = 1
NEED_WINDOW = 2


@numba.njit(cache=True, inline="always")
def _word_class(u, t):
    if u == -1 and t == 1:
        return 0
    if u == 1 and t == -1:
        return 1
    return 2


@numba.njit(cache=True)
def trace_kernel(w, w_lo, wp, wp_lo, state, va0, vb0, budget, counts, rec_xy, rec_v, rec_c, record):
    """Advance ``state = [x, y, va, vb, steps, xmin, xmax, ymin, ymax]`` in place.

    Returns ``CLOSED`` when the walk is back at the origin square with the
    starting normal, ``BUDGET`` after ``budget`` steps and ``NEED_WINDOW`` when
    a neighbour of the current square lies outside a window.
    """
    x = state[0]
    y = state[1]
    va = state[2]
    vb = state[3]
    done = state[4]
    xmin = state[5]
    xmax = state[6]
    ymin = state[7]
    ymax = state[8]
    nw = w.shape[0]
    nwp = wp.shape[0]
    status = BUDGET
    while done < budget:
        i = x - w_lo
        j = y - wp_lo
        if i < 1 or i >= nw - 1 or j < 1 or j >= nwp - 1:
            status = NEED_WINDOW
            break
        s = w[i] * wp[j]
        na = s * vb
        nb = s * va
        if na == 1:
            c = _word_class(w[i], w[i + 1])
        elif na == -1:
            c = _word_class(w[i - 1], w[i])
        elif nb == 1:
            c = 3 + _word_class(wp[j], wp[j + 1])
        else:
            c = 3 + _word_class(wp[j - 1], wp[j])
        counts[c] += 1
        if record:
            rec_xy[done, 0] = x
            rec_xy[done, 1] = y
            rec_v[done, 0] = va
            rec_v[done, 1] = vb
            rec_c[done] = c
        x += na
        y += nb
        va = na
        vb = nb
        done += 1
        if x < xmin:
            xmin = x
        elif x > xmax:
            xmax = x
        if y < ymin:
            ymin = y
        elif y > ymax:
            ymax = y
        if x == 0 and y == 0 and va == va0 and vb == vb0:
            status = CLOSED
            break
    state[5] = xmin
    state[6] = xmax
    state[7] = ymin
    state[8] = ymax
    state[0] = x
    state[1] = y
    state[2] = va
    state[3] = vb
    state[4] = done
    return status


@numba.njit(cache=True)
def batch_trace(W, WP, center, va0, vb0, budget):
    """Trace every row pair of fixed windows; ``W[:, center]`` is index 0.

    Returns ``(period, first_class)``; ``period`` is 0 for curves still open
    after ``budget`` steps and -1 when a row pair needed a wider window.
    """
    n = W.shape[0]
    period = np.zeros(n, dtype=np.int64)
    first = np.zeros(n, dtype=np.int8)
    width = W.shape[1]
    widthp = WP.shape[1]
    for r in range(n):
        x = 0
        y = 0
        va = va0[r]
        vb = vb0[r]
        for k in range(budget):
            i = x + center
            j = y + center
            if i < 1 or i >= width - 1 or j < 1 or j >= widthp - 1:
                period[r] = -1
                break
            s = W[r, i] * WP[r, j]
            na = s * vb
            nb = s * va
            if k == 0:
                if na == 1:
                    first[r] = _word_class(W[r, i], W[r, i + 1])
                elif na == -1:
                    first[r] = _word_class(W[r, i - 1], W[r, i])
                elif nb == 1:
                    first[r] = 3 + _word_class(WP[r, j], WP[r, j + 1])
                else:
                    first[r] = 3 + _word_class(WP[r, j - 1], WP[r, j])
            x += na
            y += nb
            va = na
            vb = nb
            if x == 0 and y == 0 and va == va0[r] and vb == vb0[r]:
                period[r] = k + 1
                break
    return period, first


# ---------------------------------------------------------------------------
# tracing with sequences generated on demand

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SCALE = 1.0 / 9007199254740992.0

MARKOV = 0
BERNOULLI = 1


@numba.njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, inline="always")
def keyed_uniform(k1, k2, counter):
    """Scalar twin of ``_keyed.uniform``."""
    c = np.uint64(np.int64(counter))
    z = _mix(_mix(k1 + c * _GOLDEN) ^ k2)
    return np.float64(z >> np.uint64(11)) * _SCALE


@numba.njit(cache=True)
def _grow(buf, need):
    n = buf.shape[0]
    while n <= need:
        n *= 2
    out = np.empty(n, dtype=np.int8)
    out[: buf.shape[0]] = buf
    return out


@numba.njit(cache=True)
def stream_trace(kind, p, q, keys, keys_p, origin, origin_p, va0, vb0, budget):
    """Closure periods for curves whose sequences are generated as the walk needs them.

    ``keys[r]`` holds ``(k1, k2)`` of the right and left flip streams for a
    Markov row, or of the Bernoulli stream (twice) for a Bernoulli row, in
    which case ``p`` and ``q`` are the probabilities of ``+1``.  Periods are 0
    for curves still open after ``budget`` steps.
    """
    n = va0.shape[0]
    period = np.zeros(n, dtype=np.int64)
    for r in range(n):
        # right[j] = omega_j, left[j] = omega_{-j-1}; counts say how many are known
        wr = np.empty(64, dtype=np.int8)
        wl = np.empty(64, dtype=np.int8)
        pr = np.empty(64, dtype=np.int8)
        pl = np.empty(64, dtype=np.int8)
        nwr = nwl = npr = npl = 0
        if kind == MARKOV:
            wr[0] = origin[r]
            pr[0] = origin_p[r]
            nwr = npr = 1
        x = 0
        y = 0
        va = va0[r]
        vb = vb0[r]
        for k in range(budget):
            # omega_x
            if kind == BERNOULLI:
                a = 1 if keyed_uniform(keys[r, 0], keys[r, 1], x) < p else -1
            elif x >= 0:
                if x >= nwr:
                    if x >= wr.shape[0]:
                        wr = _grow(wr, x)
                    flip = keyed_uniform(keys[r, 0], keys[r, 1], x - 1) >= p
                    wr[x] = -wr[x - 1] if flip else wr[x - 1]
                    nwr = x + 1
                a = wr[x]
            else:
                j = -x - 1
                if j >= nwl:
                    if j >= wl.shape[0]:
                        wl = _grow(wl, j)
                    prev = wr[0] if j == 0 else wl[j - 1]
                    flip = keyed_uniform(keys[r, 2], keys[r, 3], j) >= p
                    wl[j] = -prev if flip else prev
                    nwl = j + 1
                a = wl[j]
            # omega'_y
            if kind == BERNOULLI:
                b = 1 if keyed_uniform(keys_p[r, 0], keys_p[r, 1], y) < q else -1
            elif y >= 0:
                if y >= npr:
                    if y >= pr.shape[0]:
                        pr = _grow(pr, y)
                    flip = keyed_uniform(keys_p[r, 0], keys_p[r, 1], y - 1) >= q
                    pr[y] = -pr[y - 1] if flip else pr[y - 1]
                    npr = y + 1
                b = pr[y]
            else:
                j = -y - 1
                if j >= npl:
                    if j >= pl.shape[0]:
                        pl = _grow(pl, j)
                    prev = pr[0] if j == 0 else pl[j - 1]
                    flip = keyed_uniform(keys_p[r, 2], keys_p[r, 3], j) >= q
                    pl[j] = -prev if flip else prev
                    npl = j + 1
                b = pl[j]
            s = a * b
            na = s * vb
            nb = s * va
            x += na
            y += nb
            va = na
            vb = nb
            if x == 0 and y == 0 and va == va0[r] and vb == vb0[r]:
                period[r] = k + 1
                break
    return period
