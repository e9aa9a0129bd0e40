"""Dual coordinate descent kernel for L2-regularized linear SVMs.

Solves, in the dual, min_w 0.5*||w||^2 + C * sum_i loss(y_i * w.x_i) with
loss = max(0, 1-m) (hinge) or max(0, 1-m)^2 (squared hinge). The dual is a
box-constrained QP over one alpha per sample: box [0, C] for hinge, and
[0, inf) with a 1/(2C) diagonal shift for squared hinge. One coordinate is
minimized exactly per step; w = sum_i y_i alpha_i x_i is maintained
incrementally so each update costs O(nnz(x_i)).

Shrinking removes bound-clamped coordinates whose projected gradient says
they will stay clamped; when the shrunk problem converges, the full set is
restored and verified before declaring convergence.

Shuffling uses an in-kernel splitmix64 generator, so results are
bit-reproducible for a given seed regardless of numba version.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, nogil=True, inline="always")
def _splitmix64(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def solve(data, indices, indptr, y, n_features, C, l2_loss, tol, max_iter, seed, record):
    """Returns (w, alpha, passes, converged, max_bound_violation, history).

    `history` holds the dual (maximization) objective after every single
    coordinate update when `record` is true; it is empty otherwise. Only
    enable recording on small problems: the buffer is max_iter * n floats.
    """
    n = y.shape[0]
    if l2_loss:
        upper = np.inf
        d_shift = 1.0 / (2.0 * C)
    else:
        upper = C
        d_shift = 0.0

    # Q_ii = x_i.x_i + diagonal shift
    qd = np.empty(n)
    for i in range(n):
        s = d_shift
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * data[k]
        qd[i] = s

    w = np.zeros(n_features)
    alpha = np.zeros(n)
    index = np.arange(n)
    active = n
    state = (np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(1)) & _MASK64

    history = np.empty(max_iter * n if record else 0)
    n_recorded = 0
    f_val = 0.0  # dual minimization objective 0.5*a'Qa - e'a, tracked incrementally

    pgmax_old = np.inf
    pgmin_old = -np.inf
    max_violation = 0.0
    converged = False
    passes = 0

    for _ in range(max_iter):
        passes += 1
        pgmax_new = -np.inf
        pgmin_new = np.inf

        # Fisher-Yates shuffle of the active prefix
        for j in range(active - 1, 0, -1):
            state, r = _splitmix64(state)
            k = int(r % np.uint64(j + 1))
            tmp = index[j]
            index[j] = index[k]
            index[k] = tmp

        s_pos = 0
        while s_pos < active:
            i = index[s_pos]
            yi = y[i]
            ai = alpha[i]

            dot = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                dot += data[k] * w[indices[k]]
            g = yi * dot - 1.0 + d_shift * ai

            pg = g
            do_shrink = False
            if ai <= 0.0:
                if g > pgmax_old:
                    do_shrink = True
                elif g >= 0.0:
                    pg = 0.0
            elif ai >= upper:
                if g < pgmin_old:
                    do_shrink = True
                elif g <= 0.0:
                    pg = 0.0

            if do_shrink:
                active -= 1
                index[s_pos] = index[active]
                index[active] = i
                continue

            if pg > pgmax_new:
                pgmax_new = pg
            if pg < pgmin_new:
                pgmin_new = pg

            if abs(pg) > 1e-12:
                if qd[i] > 0.0:
                    cand = ai - g / qd[i]
                elif g < 0.0:
                    cand = np.inf  # zero row, L1 loss: dual is linear, go to the bound
                else:
                    cand = -np.inf
                new_ai = min(max(cand, 0.0), upper)
                delta = new_ai - ai
                if delta != 0.0:
                    alpha[i] = new_ai
                    for k in range(indptr[i], indptr[i + 1]):
                        w[indices[k]] += delta * yi * data[k]
                    viol = -new_ai
                    if new_ai - upper > viol:
                        viol = new_ai - upper
                    if viol > max_violation:
                        max_violation = viol
                    if record:
                        f_val += delta * g + 0.5 * delta * delta * qd[i]
                        history[n_recorded] = -f_val
                        n_recorded += 1
            s_pos += 1

        gap = max(pgmax_new, -pgmin_new)  # max |projected gradient| this pass
        if gap <= tol:
            if active == n:
                converged = True
                break
            # converged on the shrunk set only: restore and verify everything
            active = n
            pgmax_old = np.inf
            pgmin_old = -np.inf
        else:
            pgmax_old = pgmax_new if pgmax_new > 0.0 else np.inf
            pgmin_old = pgmin_new if pgmin_new < 0.0 else -np.inf

    return w, alpha, passes, converged, max_violation, history[:n_recorded]
