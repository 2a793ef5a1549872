"""Hot inner loops for block-model fitting.

The single-node move sweep dominates fit time, so it is written in
njit-compatible style and compiled with numba when available. Set
``SOFTSPACE_NUMBA=0`` to force the pure-Python/numpy fallback; both backends
run the identical function body, so results are bit-identical.
"""

from __future__ import annotations

import math
import os

import numpy as np

_MOVE_TOL = 1e-10


def _xlogx(x: float) -> float:
    if x > 0.0:
        return x * math.log(x)
    return 0.0


def _sweep_pass(indptr, indices, mult, deg, labels, block_size, e_mat, e_deg,
                order, d_work, accepted_deltas):
    """One pass of greedy single-node moves over `order`.

    Considers moving each node to a block adjacent to it and applies the move
    with the best strictly negative description-length delta. `e_mat` is the
    dense block-level edge-count matrix (diagonal = 2x internal edges),
    `e_deg` its row sums. Moves that would empty a block are skipped so the
    block count stays fixed. Returns the number of accepted moves; their
    deltas are written into `accepted_deltas`.
    """
    n_moves = 0
    n_blocks = e_deg.shape[0]
    touched = np.empty(n_blocks, dtype=np.int64)
    for oi in range(order.shape[0]):
        i = order[oi]
        r = labels[i]
        if block_size[r] <= 1:
            continue
        k_i = deg[i]
        if k_i == 0.0:
            continue
        # tally node i's edge multiplicity into each adjacent block
        n_touched = 0
        for ptr in range(indptr[i], indptr[i + 1]):
            t = labels[indices[ptr]]
            if d_work[t] == 0.0:
                touched[n_touched] = t
                n_touched += 1
            d_work[t] += mult[ptr]
        d_r = d_work[r]
        # evaluate each adjacent block as a move target
        best_s = -1
        best_delta = 0.0
        for ci in range(n_touched):
            s = touched[ci]
            if s == r:
                continue
            d_s = d_work[s]
            delta = (_xlogx(e_deg[r] - k_i) - _xlogx(e_deg[r])
                     + _xlogx(e_deg[s] + k_i) - _xlogx(e_deg[s]))
            off = 0.0
            for cj in range(n_touched):
                t = touched[cj]
                if t == r or t == s:
                    continue
                d_t = d_work[t]
                off += (_xlogx(e_mat[r, t] - d_t) - _xlogx(e_mat[r, t])
                        + _xlogx(e_mat[s, t] + d_t) - _xlogx(e_mat[s, t]))
            diag = (_xlogx(e_mat[r, r] - 2.0 * d_r) - _xlogx(e_mat[r, r])
                    + _xlogx(e_mat[s, s] + 2.0 * d_s) - _xlogx(e_mat[s, s])
                    + 2.0 * (_xlogx(e_mat[r, s] + d_r - d_s) - _xlogx(e_mat[r, s])))
            delta -= off + 0.5 * diag
            if delta < best_delta - _MOVE_TOL:
                best_delta = delta
                best_s = s
        if best_s >= 0 and best_delta < -_MOVE_TOL:
            s = best_s
            d_s = d_work[s]
            for ci in range(n_touched):
                t = touched[ci]
                if t == r or t == s:
                    continue
                d_t = d_work[t]
                e_mat[r, t] -= d_t
                e_mat[t, r] -= d_t
                e_mat[s, t] += d_t
                e_mat[t, s] += d_t
            e_mat[r, r] -= 2.0 * d_r
            e_mat[s, s] += 2.0 * d_s
            e_mat[r, s] += d_r - d_s
            e_mat[s, r] += d_r - d_s
            e_deg[r] -= k_i
            e_deg[s] += k_i
            labels[i] = s
            block_size[r] -= 1
            block_size[s] += 1
            accepted_deltas[n_moves] = best_delta
            n_moves += 1
        # reset work array
        for ci in range(n_touched):
            d_work[touched[ci]] = 0.0
    return n_moves


def _numba_enabled() -> bool:
    flag = os.environ.get("SOFTSPACE_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# the python fallback runs the same function body, so results match bit-for-bit
sweep_pass_python = _sweep_pass

if _numba_enabled():
    from numba import njit

    _xlogx = njit(cache=True)(_xlogx)
    sweep_pass = njit(cache=True)(_sweep_pass)
    BACKEND = "numba"
else:
    sweep_pass = _sweep_pass
    BACKEND = "python"
