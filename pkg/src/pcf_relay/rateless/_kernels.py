"""Numba kernels: graph sampling, sum-product sweeps and peeling."""

import numpy as np
from numba import njit

from pcf_relay.channels import LLR_MAX

_T_MAX = np.tanh(LLR_MAX / 2.0)


@njit(cache=True)
def fill_neighbors(k, degs, pool, ptr, idx, mark, stamp0):
    """Draw ``degs[s]`` distinct indices per symbol from ``pool``.

    Returns the number of pool entries consumed, or -1 if the pool ran out.
    """
    pos = 0
    n = len(degs)
    for s in range(n):
        d = degs[s]
        start = ptr[s]
        stamp = stamp0 + s + 1
        cnt = 0
        while cnt < d:
            if pos >= len(pool):
                return -1
            v = pool[pos]
            pos += 1
            if mark[v] == stamp:
                continue
            mark[v] = stamp
            idx[start + cnt] = v
            cnt += 1
        idx[start : start + d].sort()
    return pos


@njit(cache=True)
def _atanh2(x):
    if x >= 1.0:
        return LLR_MAX
    if x <= -1.0:
        return -LLR_MAX
    v = np.log((1.0 + x) / (1.0 - x))
    if v > LLR_MAX:
        return LLR_MAX
    if v < -LLR_MAX:
        return -LLR_MAX
    return v


@njit(cache=True)
def accumulate(prior, chk_var, c2v, total):
    for v in range(len(prior)):
        total[v] = prior[v]
    for e in range(len(chk_var)):
        total[chk_var[e]] += c2v[e]


@njit(cache=True)
def bp_sweeps(prior, chk_ptr, chk_var, chk_tanh, c2v, total, n_sweeps):
    """Check-serial sum-product sweeps; ``c2v`` and ``total`` are updated in place.

    ``chk_tanh[j]`` is tanh(L_j/2) for a check whose parity is observed with
    LLR L_j (1.0 for a hard parity-zero constraint).
    """
    n_chk = len(chk_ptr) - 1
    tmax = _T_MAX
    buf = np.empty(256)
    for _ in range(n_sweeps):
        for j in range(n_chk):
            a = chk_ptr[j]
            b = chk_ptr[j + 1]
            d = b - a
            if d == 0:
                continue
            if d > len(buf):
                buf = np.empty(2 * d)
            # tanh of variable-to-check messages
            nz = 0
            zpos = -1
            prod = 1.0
            for e in range(a, b):
                m = total[chk_var[e]] - c2v[e]
                t = np.tanh(0.5 * m)
                if t > tmax:
                    t = tmax
                elif t < -tmax:
                    t = -tmax
                buf[e - a] = t
                if t == 0.0:
                    nz += 1
                    zpos = e
                else:
                    prod *= t
            tj = chk_tanh[j]
            for e in range(a, b):
                t = buf[e - a]
                if nz == 0:
                    out = tj * prod / t
                elif nz == 1 and e == zpos:
                    out = tj * prod
                else:
                    out = 0.0
                new = _atanh2(out)
                v = chk_var[e]
                total[v] += new - c2v[e]
                c2v[e] = new
    return total


@njit(cache=True)
def check_syndrome(hard, chk_ptr, chk_var, chk_bit, chk_active):
    """Number of active checks whose parity disagrees with ``chk_bit``."""
    bad = 0
    for j in range(len(chk_ptr) - 1):
        if not chk_active[j]:
            continue
        s = chk_bit[j]
        for e in range(chk_ptr[j], chk_ptr[j + 1]):
            s ^= hard[chk_var[e]]
        if s != 0:
            bad += 1
    return bad


@njit(cache=True)
def peel(n_var, chk_ptr, chk_var, var_ptr, var_chk, chk_bit, chk_active, known, value):
    """Peeling decoder on erasure observations.

    ``known``/``value`` carry pre-known variables in and the result out.
    Returns the number of variables still unknown.
    """
    n_chk = len(chk_ptr) - 1
    deg = np.zeros(n_chk, dtype=np.int64)
    acc = np.zeros(n_chk, dtype=np.int8)
    for j in range(n_chk):
        if not chk_active[j]:
            continue
        acc[j] = chk_bit[j]
        for e in range(chk_ptr[j], chk_ptr[j + 1]):
            v = chk_var[e]
            if known[v]:
                acc[j] ^= value[v]
            else:
                deg[j] += 1
    stack = np.empty(n_chk, dtype=np.int64)
    top = 0
    for j in range(n_chk):
        if chk_active[j] and deg[j] == 1:
            stack[top] = j
            top += 1
    while top > 0:
        top -= 1
        j = stack[top]
        if deg[j] != 1:
            continue
        u = -1
        for e in range(chk_ptr[j], chk_ptr[j + 1]):
            if not known[chk_var[e]]:
                u = chk_var[e]
                break
        if u < 0:
            continue
        known[u] = True
        value[u] = acc[j]
        for e in range(var_ptr[u], var_ptr[u + 1]):
            c = var_chk[e]
            if not chk_active[c]:
                continue
            acc[c] ^= value[u]
            deg[c] -= 1
            if deg[c] == 1:
                stack[top] = c
                top += 1
    remaining = 0
    for v in range(n_var):
        if not known[v]:
            remaining += 1
    return remaining
