"""Command-line interface.

    gegmra design geg:3:12
    gegmra bands geg:3:1 --levels 7
    gegmra simulate --type ABC --at 0.25 --inception 4.125 -o abc.csv
    gegmra analyze abc.csv --filter geg:3:12 --truth 51.4
    gegmra sweep --filters daub4,geg:3:1,geg:3:12
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import List, Optional

import numpy as np

from .config import OUTPUT_DIR_ENV, RunConfig, load_config
from .filters import FilterPair, parse_filter_spec
from .mra import decompose
from .powersys import FAULT_TYPES, FaultScenario, generate_fault_record, standard_catalog
from .records import read_record, write_record
from .pipeline import analyze_record, run_sweep
from .spectral import band_table, cascade, dtft, fundamental_leakage


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _json(obj) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.generic):
            return clean(o.item())
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _outdir(cfg: RunConfig, override: Optional[str]) -> str:
    d = override or cfg.output_dir
    os.makedirs(d, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# subcommands


def cmd_design(args, cfg):
    pair = parse_filter_spec(args.filter)
    if args.format == "json":
        _emit(_json(pair.to_dict()), args.output)
    else:
        rows = [(k, _fmt(h), _fmt(g)) for k, (h, g) in enumerate(zip(pair.h, pair.g))]
        _emit(_csv(("k", "h_k", "g_k"), rows), args.output)


def cmd_response(args, cfg):
    pair = parse_filter_spec(args.filter)
    resp = dtft(pair.h if args.kind == "scaling" else pair.g, args.grid)
    rows = zip(resp.omega, resp.magnitude, resp.phase, resp.group_delay)
    _emit(_csv(("omega", "magnitude", "phase", "group_delay"), ([_fmt(v) for v in r] for r in rows)), args.output)


def cmd_bands(args, cfg):
    pair = None if args.filter == "ideal" else parse_filter_spec(args.filter)
    table = band_table(pair, args.sample_rate or cfg.sample_rate, args.levels, cfg.fundamental, args.method)
    _emit(_json(table.to_dict(rounded=args.rounded)), args.output)


def cmd_cascade(args, cfg):
    pair = parse_filter_spec(args.filter)
    wf = cascade(pair, args.kind, args.iterations)
    _emit(_csv(("t", "value"), ((_fmt(t), _fmt(v)) for t, v in zip(wf.t, wf.samples))), args.output)


def cmd_decompose(args, cfg):
    pair = parse_filter_spec(args.filter)
    rec = read_record(args.record, cfg.fundamental)
    dec = decompose(rec.channel(args.channel), pair, args.levels, rec.sample_rate)
    out = _outdir(cfg, args.outdir)
    for j in range(1, dec.levels + 1):
        a, d = dec.approximation(j), dec.detail(j)
        rows = ((n, _fmt(x), _fmt(y)) for n, (x, y) in enumerate(zip(a, d)))
        _emit(_csv(("n", f"a_{j}", f"d_{j}"), rows), os.path.join(out, f"level{j}.csv"))
    meta = {
        "filter": pair.name,
        "channel": args.channel,
        "source_length": dec.source_length,
        "levels": [
            {"level": j, "effective_rate_hz": dec.effective_rate[j - 1], "delay_samples": dec.delays[j - 1],
             "length": len(dec.approximation(j))}
            for j in range(1, dec.levels + 1)
        ],
    }
    _emit(_json(meta), os.path.join(out, "decomposition.json"))


def cmd_simulate(args, cfg):
    sc = FaultScenario(args.type, args.at, args.inception, args.rf, cfg.source)
    rec = generate_fault_record(sc, cfg.line, args.cycles or cfg.duration_cycles, cfg.samples_per_cycle, cfg.fundamental)
    path = args.output or os.path.join(_outdir(cfg, None), f"{sc.scenario_id}.csv")
    write_record(rec, path)


def cmd_analyze(args, cfg):
    pair = parse_filter_spec(args.filter)
    rec = read_record(args.record, cfg.fundamental)
    res = analyze_record(rec, pair, cfg.pipeline_settings(), truth_km=args.truth, fault_type=args.fault_type)
    out = _outdir(cfg, args.outdir)
    stem = os.path.splitext(os.path.basename(args.record))[0]
    summary = {
        "record": os.path.basename(args.record),
        "filter": pair.name,
        "detected": res.detection.detected,
        "inception_index_level1": res.detection.inception_index,
        "inception_cycles": res.inception_cycles,
        "ground_involved": res.detection.ground_involved,
        "triggering_components": list(res.detection.triggering_components),
        "thresholds": res.thresholds.values,
        "fault_type": res.fault_type,
        "fundamental_leakage": fundamental_leakage(pair, rec.sample_rate, rec.fundamental),
    }
    if res.report is not None:
        rep = res.report
        err = rep.error if rep.error is not None else [None] * len(rep.distance_km)
        rows = ((w, _fmt(d), _fmt(e)) for w, d, e in zip(rep.window_index, rep.distance_km, err))
        _emit(_csv(("window", "D_F_km", "error"), rows), os.path.join(out, f"{stem}_{pair.name}_windows.csv"))
        summary.update(
            truth_km=rep.truth_km,
            line_km=rep.line_km,
            sixth_window_km=rep.sixth_window_distance,
            sixth_window_error=rep.sixth_window_error,
            per_cycle=[{"cycle": c, "D_F_km": d, "error": e} for c, d, e in rep.per_cycle()],
        )
    _emit(_json(summary), os.path.join(out, f"{stem}_{pair.name}_summary.json"))


def cmd_sweep(args, cfg):
    if args.catalog:
        with open(args.catalog) as fh:
            entries = json.load(fh)
        if not isinstance(entries, list):
            raise ValueError(f"catalog {args.catalog} must hold a JSON list, got {type(entries).__name__}")
        catalog = [FaultScenario.from_dict(e) for e in entries]
    else:
        catalog = standard_catalog(source=cfg.source)
    pairs: List[FilterPair] = [parse_filter_spec(s) for s in args.filters.split(",") if s.strip()]
    if not pairs:
        raise UsageError("--filters must name at least one filter")
    out = _outdir(cfg, args.outdir)
    if args.save_catalog:
        _emit(_json([s.to_dict() for s in catalog]), args.save_catalog)
    res = run_sweep(catalog, pairs, cfg.pipeline_settings(), workers=args.workers)
    leakage = {p.name: fundamental_leakage(p, cfg.sample_rate, cfg.fundamental) for p in pairs}
    _emit(_json({"filters": res.filters, "summary": res.summary(), "fundamental_leakage": leakage}),
          os.path.join(out, "sweep_summary.json"))
    cols = ["scenario_id", "fault_type", "fault_class", "filter_name", "true_inception_cycles", "detected",
            "detected_inception_cycles", "ground_flag", "ground_correct", "fault_type_used",
            "sixth_window_km", "sixth_window_error", "failure"]
    rows = []
    for r in res.rows:
        d = r.to_dict()
        rows.append(["" if d[c] is None else (_fmt(d[c]) if isinstance(d[c], float) else d[c]) for c in cols])
    _emit(_csv(cols, rows), os.path.join(out, "sweep_rows.csv"))
    names = res.filters
    err_rows = ([t["id"]] + [_fmt(t.get(n)) for n in names] for t in res.error_table())
    _emit(_csv(["id"] + [f"{n.lower()}_err" for n in names], err_rows), os.path.join(out, "sixth_window_errors.csv"))


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gegmra", description="Gegenbauer filter banks and fault analysis")
    p.add_argument("--config", help="JSON configuration file")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("design", help="filter coefficients")
    s.add_argument("filter")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("response", help="frequency response series")
    s.add_argument("filter")
    s.add_argument("--kind", choices=("scaling", "wavelet"), default="scaling")
    s.add_argument("--grid", type=int, default=4096)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_response)

    s = sub.add_parser("bands", help="per-level frequency band table")
    s.add_argument("filter", help="filter spec or 'ideal'")
    s.add_argument("--levels", type=int, default=7)
    s.add_argument("--sample-rate", type=float)
    s.add_argument("--method", choices=("table", "exact"), default="table")
    s.add_argument("--rounded", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_bands)

    s = sub.add_parser("cascade", help="scaling/wavelet waveform by the cascade algorithm")
    s.add_argument("filter")
    s.add_argument("--kind", choices=("scaling", "wavelet"), default="scaling")
    s.add_argument("--iterations", type=int, default=4)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_cascade)

    s = sub.add_parser("decompose", help="multi-level decomposition of one record channel")
    s.add_argument("record")
    s.add_argument("--filter", required=True)
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--channel", choices=("va", "vb", "vc", "ia", "ib", "ic"), default="va")
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("simulate", help="synthesize a fault record")
    s.add_argument("--type", required=True, choices=FAULT_TYPES)
    s.add_argument("--at", type=float, required=True, help="fault location as a fraction of line length")
    s.add_argument("--inception", type=float, required=True, help="inception instant in cycles")
    s.add_argument("--rf", type=float, default=0.0, help="fault resistance (ohm)")
    s.add_argument("--cycles", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze", help="detect, classify and locate a fault in a record")
    s.add_argument("record")
    s.add_argument("--filter", default="geg:3:12")
    s.add_argument("--truth", type=float, help="true fault distance (km)")
    s.add_argument("--fault-type", choices=FAULT_TYPES)
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", help="run a fault catalog through several filters")
    s.add_argument("catalog", nargs="?", help="JSON list of scenarios (default: built-in 90-case catalog)")
    s.add_argument("--filters", default="daub4,geg:3:1,geg:3:12")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--save-catalog")
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
