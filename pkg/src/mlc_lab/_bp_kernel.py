"""Compiled flooding BP kernel; mirrors the numpy path in :mod:`mlc_lab.ldpc`."""

import numpy as np
from numba import njit

MAX_LLR = 60.0


@njit(cache=True, inline="always")
def _phi(x):
    if x < 1e-12:
        x = 1e-12
    elif x >= MAX_LLR:
        return 0.0
    return np.log1p(2.0 / np.expm1(x))


@njit(cache=True)
def bp_decode(L, check_ptr, edge_var, var_ptr, var_edges, max_iters, min_sum, scale,
              bits, iters, converged):
    B, n = L.shape
    m = check_ptr.size - 1
    E = edge_var.size
    Q = np.empty(E)
    R = np.empty(E)
    mag = np.empty(E)
    total = np.empty(n)
    for b in range(B):
        for e in range(E):
            Q[e] = L[b, edge_var[e]]
        iters[b] = max_iters
        converged[b] = False
        for it in range(1, max_iters + 1):
            for c in range(m):
                lo = check_ptr[c]
                hi = check_ptr[c + 1]
                parity = False
                if min_sum:
                    min1 = np.inf
                    min2 = np.inf
                    arg = -1
                    for e in range(lo, hi):
                        a = abs(Q[e])
                        if Q[e] < 0:
                            parity = not parity
                        if a < min1:
                            min2 = min1
                            min1 = a
                            arg = e
                        elif a < min2:
                            min2 = a
                    for e in range(lo, hi):
                        r = min2 if e == arg else min1
                        r = scale * min(r, MAX_LLR)
                        if parity != (Q[e] < 0):
                            r = -r
                        R[e] = r
                else:
                    s = 0.0
                    for e in range(lo, hi):
                        mag[e] = _phi(abs(Q[e]))
                        s += mag[e]
                        if Q[e] < 0:
                            parity = not parity
                    for e in range(lo, hi):
                        r = _phi(max(s - mag[e], 0.0))
                        if parity != (Q[e] < 0):
                            r = -r
                        R[e] = r
            ok = True
            for v in range(n):
                t = L[b, v]
                for i in range(var_ptr[v], var_ptr[v + 1]):
                    t += R[var_edges[i]]
                total[v] = t
                bits[b, v] = 1 if t < 0 else 0
                if t == 0.0:
                    ok = False
            if ok:
                for c in range(m):
                    p = 0
                    for e in range(check_ptr[c], check_ptr[c + 1]):
                        p ^= bits[b, edge_var[e]]
                    if p:
                        ok = False
                        break
            if ok:
                iters[b] = it
                converged[b] = True
                break
            for e in range(E):
                q = total[edge_var[e]] - R[e]
                if q > MAX_LLR:
                    q = MAX_LLR
                elif q < -MAX_LLR:
                    q = -MAX_LLR
                Q[e] = q
