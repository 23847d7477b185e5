"""``mlc-lab`` command line.

Every report command writes its CSV and, unless ``--no-plot`` is given, a
PNG figure with the same stem. ``--config FILE`` reads flat ``key = value``
defaults; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import plotting, report
from .channel import from_db, to_db
from .mi import Backend, CurveLevel, QuadratureSpec, is_convex_on, mi_curve, mi_table
from .rates import ar_points, crossover, line_from_mi, line_from_operating_point
from .sim import (DEFAULT_CODE, LinkSimulator, Mode, NotBracketedError, SimConfig,
                  estimate_runtime, repetition_equivalence_experiment, snr_search)

log = logging.getLogger("mlc_lab")


def _png(out: str, suffix: str = "") -> str:
    stem, _ = os.path.splitext(out)
    return f"{stem}{suffix}.png"


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def _add_plot(p):
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")


def _add_sim(p):
    p.add_argument("--code", default=DEFAULT_CODE,
                   help="alist path, or the name of a bundled fixture")
    p.add_argument("--mode", choices=["rep", "lowrate"], default="rep")
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--snr-db", default="0:0.25:4", help="start:step:stop or comma list (dB per slot)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-frames", type=int, default=10_000)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--batch-frames", type=int, default=64)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--decoder", choices=["sum-product", "min-sum"], default="sum-product")


def _sim_config(a, **extra) -> SimConfig:
    return SimConfig(
        code=a.code, M=a.M, mode=Mode(a.mode), snr_db=tuple(report.parse_grid(a.snr_db)),
        max_frames=a.max_frames, min_errors=a.min_errors, seed=a.seed, workers=a.workers,
        batch_frames=a.batch_frames, max_iters=a.max_iters, decoder=a.decoder, **extra,
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="mlc-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key = value file of defaults")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["mi-curve"] = sub.add_parser("mi-curve", help="per-level MI over a linear SNR grid")
    p.add_argument("--gamma-min", type=float, default=0.0)
    p.add_argument("--gamma-max", type=float, default=6.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--backend", choices=["quad", "mc"], default="quad")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte-Carlo draws per point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=64, help="Gauss-Hermite nodes per axis")
    p.add_argument("--out", default="mi_curve.csv")
    _add_plot(p)

    p = subs["convexity"] = sub.add_parser("convexity", help="chord test on an MI curve CSV")
    p.add_argument("--in", dest="inp", default="mi_curve.csv")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.5)
    p.add_argument("--level", choices=["low", "high", "total"], default="low")
    _add_plot(p)

    p = subs["ar-line"] = sub.add_parser("ar-line", help="repetition rate line and SNR gains")
    p.add_argument("--gamma1", type=float, default=2.10)
    p.add_argument("--rate1", type=float, default=None,
                   help="anchor rate (e.g. a code rate at its simulated SNR); default: MI at gamma1")
    p.add_argument("--M", default="1,2,4,8")
    p.add_argument("--mi-in", default=None, help="MI curve CSV; default: quadrature on [0, 6]")
    p.add_argument("--out", default="ar_points.csv")
    _add_plot(p)

    p = subs["ber-sweep"] = sub.add_parser("ber-sweep", help="coded low-level BER over an SNR grid")
    _add_sim(p)
    p.add_argument("--out", default="ber.csv")
    _add_plot(p)

    p = subs["snr-search"] = sub.add_parser("snr-search", help="bisect for the SNR meeting a target BER")
    _add_sim(p)
    p.add_argument("--target-ber", type=float, default=1e-2)
    p.add_argument("--tol-db", type=float, default=0.05)
    p.add_argument("--full-scale", action="store_true",
                   help="long-run mode for n=64800 codes at BER 1e-6; prints a time estimate first")
    p.add_argument("--out", default=None, help="optional CSV of every evaluated point")

    p = subs["repeat-check"] = sub.add_parser(
        "repeat-check", help="coded BER with M-fold repetition at gamma1/M versus M=1 at gamma1")
    _add_sim(p)
    p.add_argument("--gamma1-db", type=float, default=4.1)
    p.add_argument("--Ms", default="1,2,4,8")
    p.add_argument("--out", default="repeat_check.csv")

    p = subs["make-codes"] = sub.add_parser("make-codes", help="regenerate the n=1008 alist fixtures")
    p.add_argument("--dir", default="codes")
    return parser, subs


def _apply_config(path: str, subs: dict[str, argparse.ArgumentParser]):
    values = report.read_config(path)
    for p in subs.values():
        defaults = {}
        for action in p._actions:
            if action.dest in values:
                v = values[action.dest]
                if isinstance(action, argparse._StoreTrueAction):
                    v = _bool(v)
                defaults[action.dest] = v
        p.set_defaults(**defaults)


def cmd_mi_curve(a) -> int:
    step = a.step
    count = int(math.floor((a.gamma_max - a.gamma_min) / step + 1e-9)) + 1
    gammas = [round(a.gamma_min + i * step, 12) for i in range(count)]
    backend = Backend(a.backend)
    rows = mi_table(gammas, backend, QuadratureSpec(nodes=a.nodes), a.samples, a.seed)
    report.write_mi_csv(rows, a.out)
    print(f"wrote {len(rows)} points to {a.out}")
    if not a.no_plot:
        print(f"figure: {plotting.plot_mi_curve(rows, _png(a.out))}")
    return 0


def cmd_convexity(a) -> int:
    curve = report.read_mi_csv(a.inp, CurveLevel(a.level))
    rep = is_convex_on(curve, a.a, a.b)
    print(f"interval [{rep.gamma_a:g}, {rep.gamma_b:g}]: convex={rep.is_convex} "
          f"max_chord_violation={report.fmt(rep.max_chord_violation)}")
    if not a.no_plot:
        print(f"figure: {plotting.plot_convexity(curve, rep, _png(a.inp, '_convexity'))}")
    return 0 if rep.is_convex else 1


def _default_curve():
    return mi_curve(np.round(np.arange(0, 121) * 0.05, 12), CurveLevel.LOW)


def cmd_ar_line(a) -> int:
    curve = report.read_mi_csv(a.mi_in) if a.mi_in else _default_curve()
    if a.rate1 is None:
        line = line_from_mi(a.gamma1, curve)
    else:
        line = line_from_operating_point(a.gamma1, a.rate1)
    pts = ar_points(line, report.parse_int_list(a.M), curve)
    report.write_ar_csv(pts, a.out)
    print(f"anchor gamma1={line.gamma1:g} ({to_db(line.gamma1):.3f} dB), R1={report.fmt(line.rate1)}, "
          f"slope={report.fmt(line.slope)}")
    for p in pts:
        gain = "n/a" if p.gain_db is None else f"{p.gain_db:.3f} dB"
        print(f"  M={p.M}: gamma={report.fmt(p.gamma_m)} AR={report.fmt(p.ar)} "
              f"MI={report.fmt(p.mi_at_gamma_m)} gain={gain}")
    for lo, hi in crossover(line, curve, upto=line.gamma1):
        print(f"  line above MI on [{lo:g}, {hi:g}]")
    if not a.no_plot:
        print(f"figure: {plotting.plot_ar_line(curve, line, pts, _png(a.out))}")
    return 0


def cmd_ber_sweep(a) -> int:
    cfg = _sim_config(a)
    with LinkSimulator(cfg) as sim:
        records = sim.sweep()
    report.write_ber_csv(records, a.out)
    for r in records:
        flag = "" if r.confident else "  (low confidence)"
        print(f"{r.snr_db:7.3f} dB  BER {r.ber:.3e}  frames {r.frames}  errors {r.bit_errors}{flag}")
    if not a.no_plot:
        print(f"figure: {plotting.plot_ber(records, _png(a.out))}")
    return 0


def cmd_snr_search(a) -> int:
    cfg = _sim_config(a, target_ber=a.target_ber, search_tol_db=a.tol_db, full_scale=a.full_scale)
    if a.full_scale:
        code = cfg.load_code()
        if code.n < 64800:
            print(f"warning: --full-scale with n={code.n}; the reference operating point "
                  f"needs the n=64800 rate-1/2 matrix", file=sys.stderr)
        secs = estimate_runtime(cfg, a.target_ber)
        steps = max(1, math.ceil(math.log2(max(max(cfg.snr_db) - min(cfg.snr_db), 1e-9) / cfg.search_tol_db))) + 2
        print(f"estimated runtime: {secs / 3600:.2f} h per point, ~{steps} points "
              f"({secs * steps / 3600:.1f} h total)", file=sys.stderr, flush=True)
    try:
        res = snr_search(cfg)
    except NotBracketedError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if a.out:
        report.write_ber_csv(res.evaluations, a.out)
    lo, hi = res.bracket_db
    print(f"gamma_hat={report.fmt(res.gamma)} ({res.snr_db:.4f} dB), bracket [{lo:.4f}, {hi:.4f}] dB, "
          f"BER {res.record.ber:.3e} over {res.record.frames} frames")
    return 0


def cmd_repeat_check(a) -> int:
    cfg = _sim_config(a)
    rows = repetition_equivalence_experiment(cfg, float(from_db(a.gamma1_db)), report.parse_int_list(a.Ms))
    report.write_equivalence_csv(rows, a.out)
    for r in rows:
        print(f"M={r.M}: slot SNR {to_db(r.slot_gamma):.3f} dB  BER {r.record.ber:.3e} "
              f"+/- {r.record.stderr:.1e}  z={r.z:+.2f}")
    return 0


def cmd_make_codes(a) -> int:
    from .construct import write_fixtures

    for path in write_fixtures(a.dir):
        print(path)
    return 0


COMMANDS = {
    "mi-curve": cmd_mi_curve,
    "convexity": cmd_convexity,
    "ar-line": cmd_ar_line,
    "ber-sweep": cmd_ber_sweep,
    "snr-search": cmd_snr_search,
    "repeat-check": cmd_repeat_check,
    "make-codes": cmd_make_codes,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        _apply_config(known.config, subs)
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * a.verbose, format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[a.command](a)


if __name__ == "__main__":
    sys.exit(main())
