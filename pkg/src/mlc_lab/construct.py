"""Pseudorandom LDPC constructions for desk-scale fixtures and tests."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .ldpc import LdpcCode


def _four_cycle_edges(ci: np.ndarray, vi: np.ndarray, m: int, n: int) -> np.ndarray:
    """Indices of edges that close a length-4 cycle (one per offending check pair)."""
    H = sparse.csr_matrix((np.ones(ci.size, dtype=np.int32), (ci, vi)), shape=(m, n))
    C = sparse.triu(H @ H.T, k=1).tocoo()
    bad_pairs = C.data >= 2
    if not bad_pairs.any():
        return np.empty(0, dtype=np.int64)
    bad_checks = np.unique(C.row[bad_pairs])
    Hb = H[bad_checks] .multiply(H[C.col[bad_pairs]].sum(axis=0) > 0).tocoo()
    # one edge of each bad check that touches a shared variable
    key = {(c, v): e for e, (c, v) in enumerate(zip(ci, vi))}
    picked = {}
    for r, v in zip(Hb.row, Hb.col):
        c = bad_checks[r]
        picked.setdefault(c, key[(c, v)])
    return np.fromiter(picked.values(), dtype=np.int64)


def _repair(ci, vi, m, n, rng, rounds):
    for _ in range(rounds):
        pairs = ci.astype(np.int64) * n + vi
        _, first = np.unique(pairs, return_index=True)
        dup = np.setdiff1d(np.arange(ci.size), first)
        bad = np.union1d(dup, _four_cycle_edges(ci, vi, m, n)) if dup.size == 0 else dup
        if bad.size == 0:
            return ci, vi, True
        partners = rng.integers(0, ci.size, size=bad.size)
        ci[bad], ci[partners] = ci[partners].copy(), ci[bad].copy()
    pairs = ci.astype(np.int64) * n + vi
    if np.unique(pairs).size != pairs.size:
        raise RuntimeError("could not remove repeated edges; try another seed")
    return ci, vi, False


def make_regular_code(n: int, dv: int, dc: int, seed: int = 0, rounds: int = 2000) -> LdpcCode:
    """(dv, dc)-regular code by random socket matching.

    Repeated edges are always removed; 4-cycles are removed as far as
    ``rounds`` degree-preserving edge swaps allow (dense low-rate codes may
    keep some).
    """
    if (n * dv) % dc:
        raise ValueError(f"n*dv={n * dv} is not divisible by dc={dc}")
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    vi = np.repeat(np.arange(n), dv)
    ci = rng.permutation(np.repeat(np.arange(m), dc))
    ci, vi, _ = _repair(ci, vi, m, n, rng, rounds)
    return LdpcCode(n, m, ci, vi, name=f"regular({dv},{dc}) n={n}")


def make_ira_code(n: int, k: int, info_degree: int | None = None, seed: int = 0) -> LdpcCode:
    """Irregular repeat-accumulate code with a staircase parity part.

    Information columns get ``info_degree`` distinct checks each, spread as
    evenly as possible over rows; the last ``n-k`` columns form the
    dual-diagonal accumulator, the same layout as DVB-S2 matrices. The
    default ``info_degree`` is ``max(3, ceil((n-k)/k))``.
    """
    m = n - k
    if not 0 < k < n:
        raise ValueError("need 0 < k < n")
    if info_degree is None:
        # every check sees at least one information bit
        info_degree = max(3, -(-m // k))
    rng = np.random.default_rng(seed)
    sockets = rng.permutation(np.resize(np.arange(m), k * info_degree))
    ci = sockets.reshape(k, info_degree)
    # resolve repeated checks within a column
    for j in np.flatnonzero([len(set(r)) < info_degree for r in ci]):
        ci[j] = rng.choice(m, size=info_degree, replace=False)
    vi = np.repeat(np.arange(k), info_degree)
    rows = [ci.ravel()]
    cols = [vi]
    diag = np.arange(m)
    rows += [diag, diag[1:]]
    cols += [k + diag, k + diag[:-1]]
    return LdpcCode(n, m, np.concatenate(rows), np.concatenate(cols), name=f"ira n={n} k={k}")


REFERENCE_SEED = 2026

# file name -> builder for the shipped n=1008 fixtures
FIXTURES = {
    "r12_n1008.alist": lambda: make_regular_code(1008, 3, 6, seed=REFERENCE_SEED),
    "r14_n1008.alist": lambda: make_regular_code(1008, 3, 4, seed=REFERENCE_SEED),
    "r18_n1008.alist": lambda: make_ira_code(1008, 126, seed=REFERENCE_SEED),
    "r116_n1008.alist": lambda: make_ira_code(1008, 63, seed=REFERENCE_SEED),
}


def write_fixtures(directory) -> list[str]:
    """Regenerate the reference alist files into ``directory``."""
    import os

    from .ldpc import save_alist

    os.makedirs(directory, exist_ok=True)
    written = []
    for fname, build in FIXTURES.items():
        path = os.path.join(directory, fname)
        save_alist(build(), path)
        written.append(path)
    return written
