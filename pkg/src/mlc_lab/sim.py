"""Monte-Carlo link simulation of the low level.

One frame: information bits -> LDPC encode -> low-level bits of QPSK
(high-level bits are random payload) -> optional symbol repetition ->
AWGN -> sum combining -> exact LLRs -> belief propagation -> bit errors.

Randomness is keyed by ``(seed, batch index)``, and batches are reduced
in index order with the stopping rule applied per batch. Output therefore
depends only on the configuration and seed, not on the worker count or
scheduling. Every SNR point reuses the same streams (common random
numbers), which keeps sweeps and bisections well behaved.
"""

from __future__ import annotations

import enum
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from multiprocessing import get_context

import numpy as np

from .channel import ChannelParams, RepetitionScheme, from_db, make_rng, to_db, transmit_repeated
from .constellation import map_bits_array, qpsk
from .demod import demap_combined
from .ldpc import LdpcCode, decode_bp_batch, encode, load_alist

log = logging.getLogger(__name__)

DEFAULT_CODE = "r12_n1008.alist"


class Mode(enum.Enum):
    SYMBOL_REPETITION = "rep"
    LOW_RATE_CODE = "lowrate"


@dataclass(frozen=True)
class SimConfig:
    """Link simulation settings.

    In ``SYMBOL_REPETITION`` mode the code is the base code and each coded
    symbol is sent ``M`` times at amplitude ``1/sqrt(M)``. In
    ``LOW_RATE_CODE`` mode the code is expected to already have rate
    ``R/M`` and every symbol is sent once; ``M`` is kept for bookkeeping.
    SNRs are per channel use (per slot).
    """

    code: str = DEFAULT_CODE
    M: int = 1
    mode: Mode = Mode.SYMBOL_REPETITION
    snr_db: tuple[float, ...] = ()
    target_ber: float = 1e-2
    max_frames: int = 10_000
    min_errors: int = 100
    seed: int = 0
    workers: int = 1
    batch_frames: int = 64
    max_iters: int = 50
    decoder: str = "sum-product"
    search_tol_db: float = 0.05
    full_scale: bool = False

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if self.max_frames < 1 or self.batch_frames < 1 or self.workers < 1:
            raise ValueError("max_frames, batch_frames and workers must be positive")
        if self.min_errors < 1:
            raise ValueError("min_errors must be positive")

    @property
    def slots(self) -> int:
        return self.M if self.mode is Mode.SYMBOL_REPETITION else 1

    def load_code(self) -> LdpcCode:
        return resolve_code(self.code)


def resolve_code(path: str) -> LdpcCode:
    """Load an alist by path, falling back to the bundled fixtures by file name."""
    if os.path.exists(path):
        return _load_cached(os.path.abspath(path))
    bundled = resources.files("mlc_lab") / "codes" / os.path.basename(path)
    if bundled.is_file():
        return _load_cached(str(bundled))
    raise FileNotFoundError(f"no alist at {path!r} and no bundled fixture of that name")


@lru_cache(maxsize=16)
def _load_cached(path: str) -> LdpcCode:
    return load_alist(path)


CONFIDENT_ERRORS = 50


@dataclass(frozen=True)
class BerRecord:
    snr_db: float
    snr_linear: float
    frames: int
    bit_errors: int
    info_bits: int
    avg_iterations: float
    sum_sq_frame_errors: int = 0
    high_errors: int = 0
    high_bits: int = 0
    M: int = 1
    mode: Mode = Mode.SYMBOL_REPETITION

    @property
    def ber(self) -> float:
        return self.bit_errors / self.info_bits if self.info_bits else 0.0

    @property
    def confident(self) -> bool:
        return self.bit_errors >= CONFIDENT_ERRORS

    @property
    def stderr(self) -> float:
        """Standard error of ``ber`` with frames as the independent unit.

        Bit errors cluster inside failed frames, so the spread of per-frame
        error counts is used rather than a per-bit binomial.
        """
        F = self.frames
        if F < 2:
            return float("nan")
        k = self.info_bits / F
        mean = self.bit_errors / F
        var = max(self.sum_sq_frame_errors / F - mean * mean, 0.0) * F / (F - 1)
        return math.sqrt(var / F) / k

    @property
    def high_ber(self) -> float:
        """Uncoded hard-decision BER of the high level (logged, not decoded)."""
        return self.high_errors / self.high_bits if self.high_bits else 0.0


@dataclass
class _BatchOut:
    frames: int
    bit_errors: int
    sum_sq: int
    iterations: int
    high_errors: int
    high_bits: int


def _simulate_batch(code: LdpcCode, cfg: SimConfig, gamma: float, index: int, size: int) -> _BatchOut:
    rng = make_rng(cfg.seed, index)
    k, n = code.k, code.n
    u = rng.integers(0, 2, size=(size, k), dtype=np.uint8)
    c = encode(code, u)
    vh = rng.integers(0, 2, size=(size, n), dtype=np.uint8)
    x = map_bits_array(qpsk(1.0), vh, c)
    scheme = RepetitionScheme(cfg.slots)
    if gamma > 0:
        sigma2 = scheme.scale**2 / gamma
        slots = transmit_repeated(x, scheme, ChannelParams(sigma2), rng)
        llr_lo, llr_hi = demap_combined(slots.reshape(size, n * scheme.M), scheme, 1.0, sigma2)
    else:
        llr_lo = np.zeros((size, n))
        llr_hi = np.zeros((size, n))
    res = decode_bp_batch(code, llr_lo, cfg.max_iters, cfg.decoder)
    errs = (res.bits[:, code.info_positions] != u).sum(axis=1)
    high_err = int(((llr_hi <= 0).astype(np.uint8) != vh).sum())
    return _BatchOut(size, int(errs.sum()), int((errs.astype(np.int64) ** 2).sum()),
                     int(res.iterations.sum()), high_err, vh.size)


_WORKER_CODE: LdpcCode | None = None


def _init_worker(code: LdpcCode):
    global _WORKER_CODE
    _WORKER_CODE = code


def _worker_batch(args):
    cfg, gamma, index, size = args
    return _simulate_batch(_WORKER_CODE, cfg, gamma, index, size)


class LinkSimulator:
    """Owns the decoded code and, for ``workers > 1``, a process pool.

    Use as a context manager when running many points so the pool is
    started once.
    """

    def __init__(self, cfg: SimConfig, code: LdpcCode | None = None):
        self.cfg = cfg
        self.code = code if code is not None else cfg.load_code()
        self._pool = None
        if cfg.workers > 1:
            self._pool = ProcessPoolExecutor(
                cfg.workers, mp_context=get_context("spawn"),
                initializer=_init_worker, initargs=(self.code,),
            )

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _batch_sizes(self):
        bf, total = self.cfg.batch_frames, self.cfg.max_frames
        index = 0
        while index * bf < total:
            yield index, min(bf, total - index * bf)
            index += 1

    def run_point(self, gamma: float, cfg: SimConfig | None = None) -> BerRecord:
        """Simulate frames at per-slot linear SNR ``gamma`` until the stopping rule fires."""
        cfg = cfg or self.cfg
        if gamma < 0 or not np.isfinite(gamma):
            raise ValueError(f"gamma must be finite and non-negative, got {gamma}")
        frames = errors = sum_sq = iters = hi_err = hi_bits = 0
        pending = self._batch_sizes()
        done = False
        while not done:
            chunk = [b for _, b in zip(range(max(1, cfg.workers)), pending)]
            if not chunk:
                break
            if self._pool is None:
                outs = (_simulate_batch(self.code, cfg, gamma, i, s) for i, s in chunk)
            else:
                outs = self._pool.map(_worker_batch, [(cfg, gamma, i, s) for i, s in chunk])
            for out in outs:
                frames += out.frames
                errors += out.bit_errors
                sum_sq += out.sum_sq
                iters += out.iterations
                hi_err += out.high_errors
                hi_bits += out.high_bits
                if errors >= cfg.min_errors or frames >= cfg.max_frames:
                    done = True
                    break
        rec = BerRecord(
            snr_db=round(float(to_db(gamma)), 12), snr_linear=float(gamma), frames=frames,
            bit_errors=errors, info_bits=frames * self.code.k,
            avg_iterations=iters / frames if frames else 0.0,
            sum_sq_frame_errors=sum_sq, high_errors=hi_err, high_bits=hi_bits,
            M=cfg.M, mode=cfg.mode,
        )
        log.info("gamma=%.4f (%.3f dB): %d frames, %d errors, BER %.3e",
                 gamma, rec.snr_db, frames, errors, rec.ber)
        return rec

    def sweep(self, snr_db=None) -> list[BerRecord]:
        grid = self.cfg.snr_db if snr_db is None else snr_db
        return [self.run_point(float(from_db(s))) for s in grid]


def run_point(cfg: SimConfig, gamma: float) -> BerRecord:
    with LinkSimulator(cfg) as sim:
        return sim.run_point(gamma)


def ber_sweep(cfg: SimConfig) -> list[BerRecord]:
    with LinkSimulator(cfg) as sim:
        return sim.sweep()


class NotBracketedError(ValueError):
    def __init__(self, target: float, lo: BerRecord, hi: BerRecord):
        self.lo, self.hi = lo, hi
        super().__init__(
            f"target BER {target:g} not bracketed: BER {lo.ber:.3e} at {lo.snr_db:.3f} dB, "
            f"BER {hi.ber:.3e} at {hi.snr_db:.3f} dB"
        )


@dataclass(frozen=True)
class SearchResult:
    gamma: float
    record: BerRecord
    bracket_db: tuple[float, float]
    evaluations: list[BerRecord] = field(default_factory=list)

    @property
    def snr_db(self) -> float:
        return float(to_db(self.gamma))


def snr_search(cfg: SimConfig, target_ber: float | None = None,
               sim: LinkSimulator | None = None) -> SearchResult:
    """Bisect in dB between the grid ends for the lowest SNR with BER <= target.

    Stops once the bracket is narrower than ``cfg.search_tol_db`` and
    returns its upper end, the lowest measured SNR meeting the target.
    """
    target = cfg.target_ber if target_ber is None else target_ber
    if len(cfg.snr_db) < 1:
        raise ValueError("snr_search needs an SNR grid to take bounds from")
    lo_db, hi_db = min(cfg.snr_db), max(cfg.snr_db)
    own = sim is None
    sim = sim or LinkSimulator(cfg)
    try:
        evals = []

        def measure(db):
            rec = sim.run_point(float(from_db(db)))
            evals.append(rec)
            return rec

        lo = measure(lo_db)
        if lo.ber <= target:
            return SearchResult(lo.snr_linear, lo, (lo_db, lo_db), evals)
        hi = measure(hi_db)
        if hi.ber > target:
            raise NotBracketedError(target, lo, hi)
        while hi_db - lo_db >= cfg.search_tol_db:
            mid_db = 0.5 * (lo_db + hi_db)
            mid = measure(mid_db)
            if mid.ber <= target:
                hi_db, hi = mid_db, mid
            else:
                lo_db, lo = mid_db, mid
        return SearchResult(hi.snr_linear, hi, (lo_db, hi_db), evals)
    finally:
        if own:
            sim.close()


def estimate_runtime(cfg: SimConfig, target_ber: float, pilot_frames: int = 8) -> float:
    """Rough seconds per SNR point needed to collect ``min_errors`` at ``target_ber``."""
    code = cfg.load_code()
    gamma = float(from_db(max(cfg.snr_db))) if cfg.snr_db else 2.1
    t0 = time.perf_counter()
    _simulate_batch(code, cfg, gamma, 0, pilot_frames)
    per_frame = (time.perf_counter() - t0) / pilot_frames
    frames = cfg.min_errors / (target_ber * code.k)
    return per_frame * frames / max(cfg.workers, 1)


@dataclass(frozen=True)
class EquivalenceRow:
    M: int
    slot_gamma: float
    record: BerRecord
    delta: float
    z: float


def repetition_equivalence_experiment(cfg: SimConfig, gamma1: float, Ms=(1, 2, 4, 8)) -> list[EquivalenceRow]:
    """Coded BER with ``M``-fold symbol repetition at per-slot SNR ``gamma1/M``.

    Each row reports the BER difference to the ``M=1`` run at ``gamma1`` and
    that difference in units of the combined standard error.
    """
    if cfg.mode is not Mode.SYMBOL_REPETITION:
        raise ValueError("the repetition equivalence experiment needs symbol-repetition mode")
    code = cfg.load_code()
    base = run_point_with(code, replace(cfg, M=1), gamma1)
    rows = []
    for M in Ms:
        rec = base if M == 1 else run_point_with(code, replace(cfg, M=int(M)), gamma1 / M)
        delta = rec.ber - base.ber
        se = math.hypot(rec.stderr, base.stderr)
        z = 0.0 if M == 1 else (delta / se if se > 0 else (0.0 if delta == 0 else math.inf))
        rows.append(EquivalenceRow(int(M), gamma1 / M, rec, delta, z))
    return rows


def run_point_with(code: LdpcCode, cfg: SimConfig, gamma: float) -> BerRecord:
    with LinkSimulator(cfg, code) as sim:
        return sim.run_point(gamma)


def energy_per_info_bit(cfg: SimConfig, gamma: float, code: LdpcCode | None = None,
                        noise_variance: float = 1.0) -> float:
    """Transmitted energy per information bit at per-slot SNR ``gamma``."""
    code = code or cfg.load_code()
    slot_energy = gamma * noise_variance
    return slot_energy * cfg.slots * code.n / code.k
