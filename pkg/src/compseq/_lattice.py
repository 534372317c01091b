"""Low-level scaled recursion for the height-by-state forward table.

The table is held in the linear domain with one log offset per row.
Transition and emission weights are pre-scaled into [0, 1] before each
run (the caller divides out their maxima and folds the shifts into the
per-step offset), so no intermediate value can overflow.  A cell more
than ~700 nats below its own row maximum underflows to exact zero, which
is indistinguishable from a forbidden cell; row-relative precision is
otherwise full float64.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True, inline="always")
def _init_first(init_log, e0_log, mask, lin, off, has):
    rows, m = lin.shape
    for i in range(rows):
        for j in range(m):
            lin[i, j] = 0.0
        off[i] = 0.0
        has[i] = False
    m0 = NEG_INF
    for j in range(m):
        if mask[0, j]:
            v = init_log[j] + e0_log[j]
            if v > m0:
                m0 = v
    if m0 > NEG_INF:
        for j in range(m):
            if mask[0, j]:
                lin[0, j] = np.exp(init_log[j] + e0_log[j] - m0)
        off[0] = m0
        has[0] = True


@njit(cache=True, inline="always")
def _advance(lin, off, has, mask, w_excl, d_lin, e_lin, shift, new_lin, new_off, new_has):
    # One time step: stay within a row via the diagonal weight, or advance
    # from the row above via any off-diagonal weight.
    rows, m = lin.shape
    for i in range(rows):
        stay_ok = has[i]
        move_ok = i > 0 and has[i - 1]
        if not stay_ok and not move_ok:
            for j in range(m):
                new_lin[i, j] = 0.0
            new_off[i] = 0.0
            new_has[i] = False
            continue
        if stay_ok and move_ok:
            ob = off[i] if off[i] >= off[i - 1] else off[i - 1]
            fs = np.exp(off[i] - ob)
            fm = np.exp(off[i - 1] - ob)
        elif stay_ok:
            ob = off[i]
            fs = 1.0
            fm = 0.0
        else:
            ob = off[i - 1]
            fs = 0.0
            fm = 1.0
        rowmax = 0.0
        for j in range(m):
            if not mask[i, j]:
                new_lin[i, j] = 0.0
                continue
            val = lin[i, j] * d_lin[j] * fs
            if move_ok:
                acc = 0.0
                for k in range(m):
                    acc += lin[i - 1, k] * w_excl[k, j]
                val += acc * fm
            val *= e_lin[j]
            new_lin[i, j] = val
            if val > rowmax:
                rowmax = val
        if rowmax > 0.0:
            inv = 1.0 / rowmax
            for j in range(m):
                new_lin[i, j] *= inv
            new_off[i] = ob + np.log(rowmax) + shift
            new_has[i] = True
        else:
            new_off[i] = 0.0
            new_has[i] = False


@njit(cache=True, inline="always")
def _write_log(lin, off, out):
    rows, m = lin.shape
    for i in range(rows):
        for j in range(m):
            v = lin[i, j]
            if v > 0.0:
                out[i, j] = np.log(v) + off[i]
            else:
                out[i, j] = NEG_INF


@njit(cache=True)
def run_table_full(init_log, e0_log, e_lin, shifts, d_lin, w_excl, mask, out_log):
    """Fill ``out_log`` (T, rows, M) with the whole log-domain table.

    ``e_lin`` holds the per-step emission weights already scaled into
    [0, 1] by their row maxima, with the folded-out log maxima (plus the
    transition scale) in ``shifts``; the caller vectorizes that prep.
    """
    t_len, m = e_lin.shape
    rows = mask.shape[0]
    lin = np.zeros((rows, m))
    off = np.zeros(rows)
    has = np.zeros(rows, np.bool_)
    lin2 = np.zeros((rows, m))
    off2 = np.zeros(rows)
    has2 = np.zeros(rows, np.bool_)
    _init_first(init_log, e0_log, mask, lin, off, has)
    _write_log(lin, off, out_log[0])
    for t in range(1, t_len):
        _advance(lin, off, has, mask, w_excl, d_lin, e_lin[t], shifts[t],
                 lin2, off2, has2)
        lin, lin2 = lin2, lin
        off, off2 = off2, off
        has, has2 = has2, has
        _write_log(lin, off, out_log[t])


@njit(cache=True)
def run_table_final_batch(init_log, e0_log, e_lin, shifts, d_lin, w_excl, masks, out_final):
    """Run one table per mask in ``masks`` (B, rows, M); keep only the last step.

    All runs share the observation sequence and the pre-scaled emission
    weights, so each step's scaling work is done once across the batch.
    """
    b_n = masks.shape[0]
    rows = masks.shape[1]
    t_len, m = e_lin.shape
    lin = np.zeros((b_n, rows, m))
    off = np.zeros((b_n, rows))
    has = np.zeros((b_n, rows), np.bool_)
    lin2 = np.zeros((b_n, rows, m))
    off2 = np.zeros((b_n, rows))
    has2 = np.zeros((b_n, rows), np.bool_)
    for b in range(b_n):
        _init_first(init_log, e0_log, masks[b], lin[b], off[b], has[b])
    for t in range(1, t_len):
        e_t = e_lin[t]
        sh = shifts[t]
        for b in range(b_n):
            _advance(lin[b], off[b], has[b], masks[b], w_excl, d_lin, e_t, sh,
                     lin2[b], off2[b], has2[b])
        lin, lin2 = lin2, lin
        off, off2 = off2, off
        has, has2 = has2, has
    for b in range(b_n):
        _write_log(lin[b], off[b], out_final[b])
