"""Compiled inner loops: exclusion-process sampling and path functionals."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _grow(arr, size):
    out = np.empty(size, dtype=arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True)
def simulate_kernel(occ0, fwd, bwd, plus, minus, T, seed, snap_times, keep_events, capacity):
    """Sample one path of the exclusion process by uniform thinning.

    Every particle proposes moves at total rate ``2 d r_max``; a proposal picks
    one of the ``2d`` directions uniformly and is accepted with probability
    ``r / r_max`` when the target site is empty.  A single uniform selects the
    (particle, direction) pair and its fractional remainder drives the
    acceptance test.

    Returns
    -------
    occ : final occupancy
    snaps : (S, N) occupancies at ``snap_times``
    ev_t, ev_from, ev_to : event arrays (length ``n_ev``; empty if not kept)
    n_ev : number of accepted jumps
    n_prop : number of proposals
    """
    np.random.seed(seed)
    N = occ0.shape[0]
    d = plus.shape[0]
    occ = occ0.copy()
    rmax = 0.0
    for x in range(N):
        for b in range(d):
            if fwd[x, b] > rmax:
                rmax = fwd[x, b]
            if bwd[x, b] > rmax:
                rmax = bwd[x, b]
    # particle bookkeeping: pos[i] is a site, slot[x] the particle index at x
    M = 0
    for x in range(N):
        if occ[x]:
            M += 1
    pos = np.empty(max(M, 1), dtype=np.int64)
    slot = -np.ones(N, dtype=np.int64)
    i = 0
    for x in range(N):
        if occ[x]:
            pos[i] = x
            slot[x] = i
            i += 1
    S = snap_times.shape[0]
    snaps = np.zeros((S, N), dtype=np.uint8)
    cap = capacity if keep_events else 1
    ev_t = np.empty(cap, dtype=np.float64)
    ev_from = np.empty(cap, dtype=np.int32)
    ev_to = np.empty(cap, dtype=np.int32)
    n_ev = 0
    n_prop = 0
    k = 0
    while k < S and snap_times[k] <= 0.0:
        snaps[k, :] = occ
        k += 1
    if M == 0 or M == N or rmax <= 0.0:
        while k < S:
            snaps[k, :] = occ
            k += 1
        return occ, snaps, ev_t[:0], ev_from[:0], ev_to[:0], 0, 0
    total = M * 2 * d * rmax
    t = 0.0
    while True:
        t += -np.log(1.0 - np.random.random()) / total
        while k < S and snap_times[k] < t:
            snaps[k, :] = occ
            k += 1
        if t >= T:
            break
        n_prop += 1
        r = np.random.random() * (M * 2 * d)
        j = int(r)
        if j >= M * 2 * d:
            j = M * 2 * d - 1
        # the fractional part is again uniform and independent of j
        frac = r - j
        p = j // (2 * d)
        dirn = j - p * 2 * d
        x = pos[p]
        if dirn < d:
            y = plus[dirn, x]
            rate = fwd[x, dirn]
        else:
            b = dirn - d
            y = minus[b, x]
            rate = bwd[y, b]
        if occ[y]:
            continue
        if rate < rmax and frac * rmax >= rate:
            continue
        occ[x] = 0
        occ[y] = 1
        pos[p] = y
        slot[y] = p
        slot[x] = -1
        if keep_events:
            if n_ev >= ev_t.shape[0]:
                newcap = 2 * ev_t.shape[0] + 16
                ev_t = _grow(ev_t, newcap)
                ev_from = _grow(ev_from, newcap)
                ev_to = _grow(ev_to, newcap)
            ev_t[n_ev] = t
            ev_from[n_ev] = x
            ev_to[n_ev] = y
        n_ev += 1
    while k < S:
        snaps[k, :] = occ
        k += 1
    if keep_events:
        return occ, snaps, ev_t[:n_ev], ev_from[:n_ev], ev_to[:n_ev], n_ev, n_prop
    return occ, snaps, ev_t[:0], ev_from[:0], ev_to[:0], n_ev, n_prop


@njit(cache=True)
def _form_value(occ, A, C, plus):
    N = occ.shape[0]
    d = plus.shape[0]
    v = 0.0
    for x in range(N):
        if occ[x]:
            v += A[x]
            for b in range(d):
                if occ[plus[b, x]]:
                    v += C[x, b]
    return v


@njit(cache=True)
def _site_contrib(occ, A, C, plus, minus, x):
    """Part of the form that involves site ``x`` (assuming it is occupied)."""
    d = plus.shape[0]
    v = A[x]
    for b in range(d):
        if occ[plus[b, x]]:
            v += C[x, b]
        xm = minus[b, x]
        if occ[xm]:
            v += C[xm, b]
    return v


@njit(cache=True)
def replay_forms(occ0, ev_t, ev_from, ev_to, grid, A, C, plus, minus):
    """Time integrals of quadratic forms along a recorded path.

    Form ``k`` at grid node ``i`` is ``Q_{i,k}(eta) = sum_x A[i,k,x] eta_x +
    sum_{x,b} C[i,k,x,b] eta_x eta_{x+b}``; between nodes the coefficients are
    interpolated linearly in time.  The path is piecewise constant, so each
    integral is exact for the interpolated coefficients.

    Returns
    -------
    integrals : (G, K) integral of each form over each grid interval
    node_vals : (G+1, K) form values at the nodes
    jump_sum, jump_sq : (G, K) sum of jumps / squared jumps of each form
    jump_max : (K,) largest absolute jump
    """
    G = grid.shape[0] - 1
    K = A.shape[1]
    occ = occ0.copy()
    integ = np.zeros((G, K))
    node_vals = np.zeros((G + 1, K))
    jump_sum = np.zeros((G, K))
    jump_sq = np.zeros((G, K))
    jump_max = np.zeros(K)
    v0 = np.zeros(K)
    v1 = np.zeros(K)
    e = 0
    E = ev_t.shape[0]
    for i in range(G):
        g0 = grid[i]
        h = grid[i + 1] - g0
        for k in range(K):
            v0[k] = _form_value(occ, A[i, k], C[i, k], plus)
            v1[k] = _form_value(occ, A[i + 1, k], C[i + 1, k], plus)
            node_vals[i, k] = v0[k]
        th_last = 0.0
        while e < E and ev_t[e] < grid[i + 1]:
            th = (ev_t[e] - g0) / h
            w1 = 0.5 * (th * th - th_last * th_last)
            w0 = (th - th_last) - w1
            x = ev_from[e]
            y = ev_to[e]
            for k in range(K):
                integ[i, k] += h * (w0 * v0[k] + w1 * v1[k])
                b0 = _site_contrib(occ, A[i, k], C[i, k], plus, minus, x)
                b1 = _site_contrib(occ, A[i + 1, k], C[i + 1, k], plus, minus, x)
                occ[x] = 0
                a0 = _site_contrib(occ, A[i, k], C[i, k], plus, minus, y)
                a1 = _site_contrib(occ, A[i + 1, k], C[i + 1, k], plus, minus, y)
                occ[x] = 1
                v0[k] += a0 - b0
                v1[k] += a1 - b1
                dv = (1.0 - th) * (a0 - b0) + th * (a1 - b1)
                jump_sum[i, k] += dv
                jump_sq[i, k] += dv * dv
                if abs(dv) > jump_max[k]:
                    jump_max[k] = abs(dv)
            occ[x] = 0
            occ[y] = 1
            th_last = th
            e += 1
        w1 = 0.5 * (1.0 - th_last * th_last)
        w0 = (1.0 - th_last) - w1
        for k in range(K):
            integ[i, k] += h * (w0 * v0[k] + w1 * v1[k])
    for k in range(K):
        node_vals[G, k] = _form_value(occ, A[G, k], C[G, k], plus)
    return integ, node_vals, jump_sum, jump_sq, jump_max


@njit(cache=True)
def forms_on_snapshots(snaps, A, C, plus):
    """Values ``Q_{i,k}(snaps[i])`` for every node ``i`` and form ``k``."""
    S = snaps.shape[0]
    K = A.shape[1]
    out = np.zeros((S, K))
    for i in range(S):
        for k in range(K):
            out[i, k] = _form_value(snaps[i], A[i, k], C[i, k], plus)
    return out


@njit(cache=True)
def replay_snapshots(occ0, ev_t, ev_from, ev_to, times):
    """Occupancies at ``times`` reconstructed from a recorded event list."""
    S = times.shape[0]
    N = occ0.shape[0]
    occ = occ0.copy()
    out = np.zeros((S, N), dtype=np.uint8)
    e = 0
    E = ev_t.shape[0]
    for s in range(S):
        while e < E and ev_t[e] <= times[s]:
            occ[ev_from[e]] = 0
            occ[ev_to[e]] = 1
            e += 1
        out[s, :] = occ
    return out
