"""LDPC codes: alist I/O, systematic encoding and belief-propagation decoding.

The decoder works on batches of frames at once (shape ``(B, n)``), which is
what the link simulator feeds it. LLRs follow the ``ln P(0)/P(1)``
convention.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

_MAX_LLR = 60.0


class AlistError(ValueError):
    """Malformed alist text; the message names the offending line."""


@dataclass(frozen=True, eq=False)
class LdpcCode:
    """Sparse parity-check matrix with a precomputed encoder.

    ``info_positions`` lists the codeword positions that carry the
    information bits; the encoder fills the remaining positions.
    """

    n: int
    m: int
    check_idx: np.ndarray   # per edge, edges sorted by (check, variable)
    var_idx: np.ndarray
    name: str = ""
    _enc: "_Encoder" = field(init=False, repr=False)

    def __post_init__(self):
        ci = np.asarray(self.check_idx, dtype=np.int64)
        vi = np.asarray(self.var_idx, dtype=np.int64)
        order = np.lexsort((vi, ci))
        ci, vi = ci[order], vi[order]
        if np.any((np.diff(ci) == 0) & (np.diff(vi) == 0)):
            raise ValueError("parity-check matrix has repeated entries")
        if ci.size and (ci.min() < 0 or ci.max() >= self.m or vi.min() < 0 or vi.max() >= self.n):
            raise ValueError("edge index out of range")
        col_deg = np.bincount(vi, minlength=self.n)
        if np.any(col_deg == 0):
            raise ValueError(f"column {int(np.argmin(col_deg)) + 1} of H is empty")
        for a in (ci, vi):
            a.setflags(write=False)
        object.__setattr__(self, "check_idx", ci)
        object.__setattr__(self, "var_idx", vi)
        object.__setattr__(self, "_enc", _build_encoder(self))

    @property
    def edges(self) -> int:
        return self.check_idx.size

    @property
    def k(self) -> int:
        return self._enc.k

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def rank(self) -> int:
        return self.n - self.k

    @property
    def info_positions(self) -> np.ndarray:
        return self._enc.info_cols

    def H(self) -> sparse.csr_matrix:
        data = np.ones(self.edges, dtype=np.uint8)
        return sparse.csr_matrix((data, (self.check_idx, self.var_idx)), shape=(self.m, self.n))

    def column_degrees(self) -> np.ndarray:
        return np.bincount(self.var_idx, minlength=self.n)

    def row_degrees(self) -> np.ndarray:
        return np.bincount(self.check_idx, minlength=self.m)

    def syndrome(self, bits) -> np.ndarray:
        """``H c^T mod 2`` for one word or a batch of words."""
        bits = np.asarray(bits, dtype=np.uint8)
        prod = (self.H().astype(np.int32) @ bits.T.astype(np.int32)).T
        return (prod & 1).astype(np.uint8)

    @property
    def graph(self) -> "_Graph":
        g = self.__dict__.get("_graph")
        if g is None:
            g = _Graph.build(self)
            object.__setattr__(self, "_graph", g)
        return g

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_graph", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


# ----------------------------------------------------------------------------
# alist
# ----------------------------------------------------------------------------

def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(t) for t in line.split()]
    except ValueError:
        raise AlistError(f"line {lineno}: expected integers, got {line.strip()!r}") from None


def parse_alist(text: str, name: str = "") -> LdpcCode:
    """Parse alist text (MacKay format, zero padding optional)."""
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    pos = 0

    def take(what: str):
        nonlocal pos
        if pos >= len(lines):
            raise AlistError(f"unexpected end of file while reading {what}")
        lineno, ln = lines[pos]
        pos += 1
        return lineno, _ints(ln, lineno)

    lineno, head = take("dimensions")
    if len(head) != 2 or min(head) <= 0:
        raise AlistError(f"line {lineno}: expected 'n m' with positive values")
    n, m = head
    lineno, maxd = take("maximum degrees")
    if len(maxd) != 2:
        raise AlistError(f"line {lineno}: expected 'max_col_degree max_row_degree'")
    max_col, max_row = maxd

    # degree lists may wrap over several lines
    def degree_list(count: int, what: str):
        vals: list[int] = []
        first = None
        while len(vals) < count:
            lineno, v = take(what)
            first = first or lineno
            vals.extend(v)
        if len(vals) != count:
            raise AlistError(f"line {lineno}: {what} has {len(vals)} entries, expected {count}")
        return first, np.array(vals)

    cl, col_deg = degree_list(n, "column degrees")
    rl, row_deg = degree_list(m, "row degrees")
    if np.any(col_deg <= 0):
        j = int(np.argmax(col_deg <= 0))
        raise AlistError(f"line {cl}: column {j + 1} has degree {col_deg[j]} (zero column)")
    if col_deg.max() > max_col:
        raise AlistError(f"line {cl}: column degree {col_deg.max()} exceeds declared maximum {max_col}")
    if row_deg.max() > max_row:
        raise AlistError(f"line {rl}: row degree {row_deg.max()} exceeds declared maximum {max_row}")
    if col_deg.sum() != row_deg.sum():
        raise AlistError(
            f"line {rl}: row degrees sum to {row_deg.sum()} but column degrees sum to {col_deg.sum()}"
        )

    ci: list[int] = []
    vi: list[int] = []
    for j in range(n):
        lineno, entries = take(f"column {j + 1}")
        nz = [e for e in entries if e != 0]
        if len(nz) != col_deg[j]:
            raise AlistError(f"line {lineno}: column {j + 1} lists {len(nz)} rows, degree says {col_deg[j]}")
        if any(e < 1 or e > m for e in nz):
            raise AlistError(f"line {lineno}: row index out of range 1..{m}")
        if len(set(nz)) != len(nz):
            raise AlistError(f"line {lineno}: repeated row index in column {j + 1}")
        ci.extend(e - 1 for e in nz)
        vi.extend([j] * len(nz))
    col_view = set(zip(ci, vi))

    # the row section is optional in some writers; validate it when present
    if pos < len(lines):
        row_view = set()
        for i in range(m):
            lineno, entries = take(f"row {i + 1}")
            nz = [e for e in entries if e != 0]
            if len(nz) != row_deg[i]:
                raise AlistError(f"line {lineno}: row {i + 1} lists {len(nz)} columns, degree says {row_deg[i]}")
            if any(e < 1 or e > n for e in nz):
                raise AlistError(f"line {lineno}: column index out of range 1..{n}")
            row_view.update((i, e - 1) for e in nz)
        if row_view != col_view:
            raise AlistError(f"line {lineno}: row lists disagree with column lists")
        if pos < len(lines):
            raise AlistError(f"line {lines[pos][0]}: trailing data after row lists")
    else:
        counts = np.bincount(np.array(ci), minlength=m)
        if np.any(counts != row_deg):
            raise AlistError(f"line {rl}: row degrees disagree with column lists")

    return LdpcCode(n, m, np.array(ci), np.array(vi), name=name)


def load_alist(path) -> LdpcCode:
    with open(path) as fh:
        text = fh.read()
    return parse_alist(text, name=os.path.basename(str(path)))


def to_alist(code: LdpcCode) -> str:
    col_deg = code.column_degrees()
    row_deg = code.row_degrees()
    out = [f"{code.n} {code.m}", f"{col_deg.max()} {row_deg.max()}",
           " ".join(map(str, col_deg)), " ".join(map(str, row_deg))]
    by_col = np.lexsort((code.check_idx, code.var_idx))
    splits = np.cumsum(col_deg)[:-1]
    for rows in np.split(code.check_idx[by_col] + 1, splits):
        pad = [0] * (col_deg.max() - rows.size)
        out.append(" ".join(map(str, list(rows) + pad)))
    splits = np.cumsum(row_deg)[:-1]
    for cols in np.split(code.var_idx + 1, splits):
        pad = [0] * (row_deg.max() - cols.size)
        out.append(" ".join(map(str, list(cols) + pad)))
    return "\n".join(out) + "\n"


def save_alist(code: LdpcCode, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_alist(code))


# ----------------------------------------------------------------------------
# encoding
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class _Encoder:
    k: int
    info_cols: np.ndarray
    parity_cols: np.ndarray
    # dense route: parity = P @ u mod 2
    P: np.ndarray | None = None
    # triangular route: H_u (sparse) and the lower-triangular parity part
    Hu: sparse.csr_matrix | None = None
    lower: sparse.csr_matrix | None = None
    staircase: bool = False


def _build_encoder(code: LdpcCode) -> _Encoder:
    enc = _triangular_encoder(code)
    return enc if enc is not None else _dense_encoder(code)


def _triangular_encoder(code: LdpcCode) -> _Encoder | None:
    """Use the trailing ``m`` columns when they form a unit lower-triangular block.

    IRA and DVB-S2 style matrices have this layout, which allows encoding
    large codes by substitution without any elimination.
    """
    n, m = code.n, code.m
    if m >= n:
        return None
    H = code.H().tocsc()
    T = H[:, n - m:].tocsr()
    tri = sparse.triu(T, k=1)
    if tri.nnz or np.any(T.diagonal() != 1):
        return None
    lower = sparse.tril(T, k=-1).tocsr()
    lower.sort_indices()
    staircase = lower.nnz == m - 1 and np.array_equal(lower.indices, np.arange(m - 1)) and np.array_equal(
        np.diff(lower.indptr), np.r_[0, np.ones(m - 1, dtype=lower.indptr.dtype)]
    )
    return _Encoder(
        k=n - m,
        info_cols=np.arange(n - m),
        parity_cols=np.arange(n - m, n),
        Hu=H[:, : n - m].tocsr(),
        lower=lower,
        staircase=bool(staircase),
    )


def gf2_rref(A: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(2) and the pivot columns."""
    A = (np.asarray(A) & 1).astype(bool).copy()
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.flatnonzero(A[r:, c])
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        mask = A[:, c].copy()
        mask[r] = False
        A[mask] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r].astype(np.uint8), pivots


def _dense_encoder(code: LdpcCode) -> _Encoder:
    R, pivots = gf2_rref(code.H().toarray())
    pivots = np.array(pivots, dtype=np.int64)
    info = np.setdiff1d(np.arange(code.n), pivots)
    # row r of R reads: c[pivot_r] + sum_j R[r, info_j] c[info_j] = 0
    return _Encoder(k=info.size, info_cols=info, parity_cols=pivots, P=R[:, info])


def encode(code: LdpcCode, info) -> np.ndarray:
    """Systematic encoding of one word (length k) or a batch (B, k)."""
    u = np.asarray(info, dtype=np.uint8)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    enc = code._enc
    if u.shape[-1] != enc.k:
        raise ValueError(f"expected {enc.k} information bits, got {u.shape[-1]}")
    c = np.zeros((u.shape[0], code.n), dtype=np.uint8)
    c[:, enc.info_cols] = u
    if enc.P is not None:
        parity = (u.astype(np.int32) @ enc.P.T.astype(np.int32)) & 1
    else:
        s = ((enc.Hu.astype(np.int32) @ u.T.astype(np.int32)) & 1).T.astype(np.uint8)
        parity = _forward_substitute(enc, s)
    c[:, enc.parity_cols] = parity
    return c[0] if single else c


def _forward_substitute(enc: _Encoder, s: np.ndarray) -> np.ndarray:
    if enc.staircase:
        return np.bitwise_xor.accumulate(s, axis=1)
    p = s.copy()
    L = enc.lower
    for i in range(p.shape[1]):
        lo, hi = L.indptr[i], L.indptr[i + 1]
        if hi > lo:
            p[:, i] ^= np.bitwise_xor.reduce(p[:, L.indices[lo:hi]], axis=1)
    return p


# ----------------------------------------------------------------------------
# decoding
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class _Graph:
    """Padded edge tables; the extra edge index ``E`` is a neutral pad slot."""

    check_edges: np.ndarray   # (m, max_row_degree)
    var_edges: np.ndarray     # (n, max_col_degree)
    edge_var: np.ndarray      # (E,)
    edge_check: np.ndarray    # (E,)
    uniform_checks: bool
    check_ptr: np.ndarray     # CSR offsets into the check-sorted edges
    var_ptr: np.ndarray       # CSR offsets into var_edge_list
    var_edge_list: np.ndarray # edges grouped by variable

    @staticmethod
    def build(code: LdpcCode) -> "_Graph":
        E = code.edges
        by_var = np.argsort(code.var_idx, kind="stable")
        rows, cols = code.row_degrees(), code.column_degrees()
        return _Graph(
            _padded(code.check_idx, np.arange(E), code.m, E),
            _padded(code.var_idx[by_var], by_var, code.n, E),
            code.var_idx,
            code.check_idx,
            bool(np.all(rows == rows[0])),
            np.r_[0, np.cumsum(rows)].astype(np.int64),
            np.r_[0, np.cumsum(cols)].astype(np.int64),
            by_var.astype(np.int64),
        )


def _padded(owner: np.ndarray, edge: np.ndarray, count: int, pad: int) -> np.ndarray:
    deg = np.bincount(owner, minlength=count)
    out = np.full((count, deg.max()), pad, dtype=np.int64)
    start = np.r_[0, np.cumsum(deg)[:-1]]
    slot = np.arange(owner.size) - np.repeat(start, deg)
    out[owner, slot] = edge
    return out


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class BatchDecodeResult:
    bits: np.ndarray         # (B, n)
    iterations: np.ndarray   # (B,)
    converged: np.ndarray    # (B,)


def _phi(x):
    # phi(x) = -ln tanh(x/2), its own inverse on (0, inf). Arguments at the
    # clip ceiling map to exactly 0 so all-zero inputs yield exactly-zero messages.
    x = np.clip(x, 1e-12, _MAX_LLR)
    return np.where(x >= _MAX_LLR, 0.0, np.log1p(2.0 / np.expm1(x)))


def _check_update_sp(Q: np.ndarray, g: _Graph) -> np.ndarray:
    B, E = Q.shape
    mag = _phi(np.abs(Q))
    neg = Q < 0
    if g.uniform_checks:
        # edges sorted by check with equal degrees: a plain reshape groups them
        shape = (B,) + g.check_edges.shape
        total = mag.reshape(shape).sum(axis=2)
        parity = np.bitwise_xor.reduce(neg.reshape(shape), axis=2)
        total_e = np.repeat(total, shape[2], axis=1)
        parity_e = np.repeat(parity, shape[2], axis=1)
    else:
        tab = g.check_edges
        mag_p = np.concatenate([mag, np.zeros((B, 1))], axis=1)
        neg_p = np.concatenate([neg, np.zeros((B, 1), dtype=bool)], axis=1)
        total_e = mag_p[:, tab].sum(axis=2)[:, g.edge_check]
        parity_e = np.bitwise_xor.reduce(neg_p[:, tab], axis=2)[:, g.edge_check]
    ext = _phi(np.maximum(total_e - mag, 0.0))
    return np.where(parity_e ^ neg, -ext, ext)


def _check_update_ms(Q: np.ndarray, g: _Graph, scale: float) -> np.ndarray:
    B, E = Q.shape
    tab = g.check_edges
    absq = np.concatenate([np.abs(Q), np.full((B, 1), np.inf)], axis=1)[:, tab]   # (B, m, d)
    neg = np.concatenate([Q < 0, np.zeros((B, 1), dtype=bool)], axis=1)
    parity = np.bitwise_xor.reduce(neg[:, tab], axis=2)
    order = np.argsort(absq, axis=2)
    min1 = np.take_along_axis(absq, order[:, :, :1], axis=2)[..., 0]
    min2 = np.take_along_axis(absq, order[:, :, 1:2], axis=2)[..., 0] if tab.shape[1] > 1 else np.full_like(min1, np.inf)
    arg1 = np.take_along_axis(np.broadcast_to(tab, absq.shape), order[:, :, :1], axis=2)[..., 0]
    rows = g.edge_check
    is_min = arg1[:, rows] == np.arange(E)
    mag = np.where(is_min, min2[:, rows], min1[:, rows])
    sign = np.where(parity[:, rows] ^ neg[:, :-1], -1.0, 1.0)
    return sign * scale * np.minimum(mag, _MAX_LLR)


def _kernel():
    try:
        from ._bp_kernel import bp_decode
    except ImportError:  # numba missing
        return None
    return bp_decode


def decode_bp_batch(code: LdpcCode, llrs, max_iters: int = 50, algorithm: str = "sum-product",
                    scale: float = 0.75, engine: str = "auto") -> BatchDecodeResult:
    """Flooding belief propagation on a batch of frames with per-frame early exit.

    A frame converges when its hard decisions satisfy every check and none
    of its posterior LLRs is exactly zero. ``algorithm="min-sum"`` uses the
    scaled min-sum check update. ``engine`` picks the compiled kernel
    ("numba") or the vectorized numpy path ("numpy"); "auto" uses the kernel
    for min-sum only, since the numpy path is faster for sum-product. Both
    engines return identical results.
    """
    if engine not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown engine {engine!r}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if algorithm not in ("sum-product", "min-sum"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    L = np.atleast_2d(np.asarray(llrs, dtype=float))
    if L.shape[1] != code.n:
        raise ValueError(f"expected {code.n} LLRs per frame, got {L.shape[1]}")
    if not np.all(np.isfinite(L)):
        raise ValueError("LLRs must be finite")
    L = np.clip(L, -_MAX_LLR, _MAX_LLR)
    g = code.graph
    B = L.shape[0]

    use_kernel = engine == "numba" or (engine == "auto" and algorithm == "min-sum")
    kernel = _kernel() if use_kernel else None
    if kernel is None and engine == "numba":
        raise RuntimeError("numba is not available")
    if kernel is not None:
        bits = np.empty((B, code.n), dtype=np.uint8)
        iters = np.empty(B, dtype=np.int64)
        converged = np.empty(B, dtype=np.bool_)
        kernel(np.ascontiguousarray(L), g.check_ptr, g.edge_var, g.var_ptr, g.var_edge_list,
               int(max_iters), algorithm == "min-sum", float(scale), bits, iters, converged)
        return BatchDecodeResult(bits, iters, converged)

    bits = (L < 0).astype(np.uint8)
    iters = np.full(B, max_iters, dtype=np.int64)
    converged = np.zeros(B, dtype=bool)

    active = np.arange(B)
    Lc = L
    Q = Lc[:, g.edge_var]
    for it in range(1, max_iters + 1):
        if algorithm == "sum-product":
            R = _check_update_sp(Q, g)
        else:
            R = _check_update_ms(Q, g, scale)
        Rp = np.concatenate([R, np.zeros((R.shape[0], 1))], axis=1)
        total = Lc + Rp[:, g.var_edges].sum(axis=2)
        hard = (total < 0).astype(np.uint8)
        hp = np.concatenate([hard[:, g.edge_var], np.zeros((hard.shape[0], 1), dtype=np.uint8)], axis=1)
        synd_ok = ~np.bitwise_xor.reduce(hp[:, g.check_edges], axis=2).any(axis=1)
        # an exactly-zero posterior is an erasure, not a decision
        synd_ok &= (total != 0).all(axis=1)
        bits[active] = hard
        done = synd_ok
        if done.any():
            converged[active[done]] = True
            iters[active[done]] = it
            keep = ~done
            active, Lc, R, total = active[keep], Lc[keep], R[keep], total[keep]
            if active.size == 0:
                break
        Q = np.clip(total[:, g.edge_var] - R, -_MAX_LLR, _MAX_LLR)
    return BatchDecodeResult(bits, iters, converged)


def decode_bp(code: LdpcCode, llrs, max_iters: int = 50, algorithm: str = "sum-product",
              scale: float = 0.75, engine: str = "auto") -> DecodeResult:
    """Decode a single frame; see :func:`decode_bp_batch`."""
    llrs = np.asarray(llrs, dtype=float)
    if llrs.ndim != 1:
        raise ValueError("decode_bp takes one frame; use decode_bp_batch for batches")
    res = decode_bp_batch(code, llrs[None, :], max_iters, algorithm, scale, engine)
    return DecodeResult(res.bits[0], int(res.iterations[0]), bool(res.converged[0]))
