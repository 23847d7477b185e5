"""CSV schemas, the flat config format and SNR grid parsing."""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .mi import Backend, CurveLevel, MiCurve, MiPoint, MiRow
from .rates import GainPoint
from .sim import BerRecord, EquivalenceRow

MI_HEADER = ["snr_linear", "snr_db", "mi_low", "mi_high", "mi_total", "backend", "stderr"]
AR_HEADER = ["M", "snr_linear", "snr_db", "ar_bits", "mi_bits", "gain_db"]
BER_HEADER = ["snr_db", "snr_linear", "frames", "bit_errors", "ber", "avg_iterations",
              "confident", "M", "mode", "stderr", "high_level_ber"]
EQUIV_HEADER = ["M", "slot_snr_linear", "slot_snr_db", "frames", "bit_errors", "ber",
                "stderr", "delta_ber", "z_score"]


def fmt(x) -> str:
    """Floats with 9 significant digits; None and NaN become empty fields."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return format(x, ".9g")


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def _write(path, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_mi_csv(rows: list[MiRow], path=None) -> str:
    return _write(path, MI_HEADER, (
        [r.gamma, _db(r.gamma), r.mi_low, r.mi_high, r.mi_total, r.backend.value, r.stderr]
        for r in rows
    ))


def read_mi_csv(path, level: CurveLevel = CurveLevel.LOW) -> MiCurve:
    column = {CurveLevel.LOW: "mi_low", CurveLevel.HIGH: "mi_high", CurveLevel.TOTAL: "mi_total"}[level]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MI_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        pts = [
            MiPoint(float(r["snr_linear"]), float(r[column]), Backend(r["backend"]),
                    float(r["stderr"] or 0.0))
            for r in reader
        ]
    return MiCurve(level, tuple(pts))


def write_ar_csv(points: list[GainPoint], path=None) -> str:
    return _write(path, AR_HEADER, (
        [p.M, p.gamma_m, p.gamma_m_db, p.ar, p.mi_at_gamma_m, p.gain_db] for p in points
    ))


def write_ber_csv(records: list[BerRecord], path=None) -> str:
    return _write(path, BER_HEADER, (
        [r.snr_db, r.snr_linear, r.frames, r.bit_errors, r.ber, r.avg_iterations,
         r.confident, r.M, r.mode.value, r.stderr, r.high_ber]
        for r in records
    ))


def write_equivalence_csv(rows: list[EquivalenceRow], path=None) -> str:
    return _write(path, EQUIV_HEADER, (
        [r.M, r.slot_gamma, _db(r.slot_gamma), r.record.frames, r.record.bit_errors,
         r.record.ber, r.record.stderr, r.delta, r.z]
        for r in rows
    ))


def parse_grid(text: str) -> list[float]:
    """``"0:0.25:4"`` (inclusive start:step:stop) or a comma list ``"1,2.5,3"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ValueError(f"range must be start:step:stop, got {text!r}")
        start, step, stop = parts
        if step <= 0 or stop < start:
            raise ValueError(f"bad range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return [float(p) for p in text.split(",") if p.strip()]


def parse_int_list(spec: str) -> list[int]:
    return [int(p) for p in str(spec).split(",") if p.strip()]


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, keys use - or _ freely."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = line.split("=", 1)
            else:
                bits = line.split(None, 1)
                key, value = bits[0], bits[1] if len(bits) > 1 else "true"
            key = key.strip().lstrip("-").replace("-", "_")
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out
