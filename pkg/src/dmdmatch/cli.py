"""``dmdmatch`` command line.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import re
import sys
from pathlib import Path

from . import serialization
from .binarize import binarize_template
from .bench import bench_matching
from .core import TemplateError
from .evaluate import (
    cmc_curve,
    det_curve,
    rank_k_accuracy,
    read_scores_csv,
    score_all,
    tar_at_far,
    write_curve_csv,
    write_scores_csv,
)
from .relaxation import PRESETS, MatchParams, match_templates, preset
from .synth import make_pool

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _params(args) -> MatchParams:
    params = preset(args.preset)
    if getattr(args, "params_file", None):
        params = MatchParams.from_file(args.params_file, base=params)
    return params


def _load_dir(path: str):
    d = Path(path)
    if not d.is_dir():
        raise TemplateError(f"{path}: not a directory")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".dmt")
    if not files:
        raise TemplateError(f"{path}: no .dmt files")
    ids = [p.stem for p in files]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise TemplateError(f"{path}: duplicate template names {dupes}")
    return ids, [serialization.load(p) for p in files]


def cmd_match(args) -> int:
    t_q = serialization.load(args.query)
    t_g = serialization.load(args.gallery)
    res = match_templates(t_q, t_g, _params(args))
    print(f"score: {res.score:.6f}")
    print(f"n_m: {res.n_m}")
    print("pairs (i j s1 s2):")
    for i, j, s1, s2 in res.pairs:
        print(f"{i} {j} {s1:.6f} {s2:.6f}")
    return 0


def cmd_identify(args) -> int:
    q_ids, queries = _load_dir(args.query_dir)
    g_ids, gallery = _load_dir(args.gallery_dir)
    sm = score_all(queries, gallery, _params(args), workers=args.workers,
                   query_ids=q_ids, gallery_ids=g_ids)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        write_scores_csv(sm, fh)
    print(f"wrote {len(q_ids)} x {len(g_ids)} scores to {args.out}")
    return 0


_TAR = re.compile(r"^tar@far=([0-9.eE+-]+)$")
_RANK = re.compile(r"^rank(\d+)$")


def cmd_eval(args) -> int:
    metric = args.metric.lower()
    if not (_TAR.match(metric) or _RANK.match(metric) or metric in ("cmc", "det")):
        raise UsageError(f"unknown metric {args.metric!r}")
    with open(args.scores, newline="", encoding="utf-8") as fh:
        sm = read_scores_csv(fh)
    if m := _RANK.match(metric):
        print(f"{metric}={rank_k_accuracy(sm, int(m.group(1))):.6f}")
    elif m := _TAR.match(metric):
        genuine, impostor = sm.split()
        print(f"{metric}={tar_at_far(genuine, impostor, float(m.group(1))):.6f}")
    else:
        if metric == "cmc":
            points, header = cmc_curve(sm, args.max_rank), ["k", "accuracy"]
        else:
            points, header = det_curve(*sm.split(), points=args.points), ["FAR", "FNMR"]
        if args.out:
            with open(args.out, "w", newline="", encoding="utf-8") as fh:
                write_curve_csv(points, header, fh)
            print(f"wrote {len(points)} {metric} points to {args.out}")
        else:
            write_curve_csv(points, header, sys.stdout)
    return 0


def cmd_binarize(args) -> int:
    t = serialization.load(args.input)
    n = serialization.save(binarize_template(t), args.output)
    print(f"wrote {n} bytes to {args.output}")
    return 0


def cmd_inspect(args) -> int:
    sys.stdout.write(serialization.dump_template(serialization.load(args.input)))
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pool = make_pool(args.fingers, args.impressions, seed=args.seed, n_minutiae=args.minutiae,
                     sigma=args.sigma, dropout=args.dropout, spurious=args.spurious,
                     erosion=args.erosion)
    width = max(4, len(str(args.fingers - 1)))
    with open(out / "correspondences.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "record", "finger", "model_minutia"])
        for finger, k, tpl, corr in pool:
            name = f"{finger:0{width}d}_{k}.dmt"
            if args.binary:
                tpl = binarize_template(tpl)
            serialization.save(tpl, out / name)
            for rec, m in sorted(corr.items()):
                w.writerow([name, rec, finger, m])
    print(f"wrote {len(pool)} templates to {out}")
    return 0


def cmd_bench(args) -> int:
    if args.pool_dir:
        _, pool = _load_dir(args.pool_dir)
    else:
        pool = [tpl for _, _, tpl, _ in make_pool(args.fingers, 1, seed=args.seed,
                                                  n_minutiae=args.minutiae)]
        if args.binary:
            pool = [binarize_template(t) for t in pool]
    report = bench_matching(pool, args.pairs, params=_params(args), preset=args.preset)
    print(report.to_line())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dmdmatch", description="Dense minutiae descriptor template matching.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def preset_args(sp, params_file=True):
        sp.add_argument("--preset", choices=sorted(PRESETS), default="verifinger")
        if params_file:
            sp.add_argument("--params-file", help="JSON object overriding match parameters")

    sp = sub.add_parser("match", help="match two templates")
    sp.add_argument("query")
    sp.add_argument("gallery")
    preset_args(sp)
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("identify", help="score every query against every gallery template")
    sp.add_argument("--query-dir", required=True)
    sp.add_argument("--gallery-dir", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--workers", type=int, default=1)
    preset_args(sp)
    sp.set_defaults(func=cmd_identify)

    sp = sub.add_parser("eval", help="metrics from a score CSV")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--metric", required=True, help="rank1 | rank<k> | tar@far=<x> | cmc | det")
    sp.add_argument("--out", help="curve CSV destination (cmc, det)")
    sp.add_argument("--max-rank", type=int, default=None)
    sp.add_argument("--points", type=int, default=100)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("binarize", help="convert a float template to packed binary")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.set_defaults(func=cmd_binarize)

    sp = sub.add_parser("inspect", help="print a template")
    sp.add_argument("input")
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("synth", help="write a synthetic template pool")
    sp.add_argument("--fingers", type=int, required=True)
    sp.add_argument("--impressions", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--minutiae", type=int, default=40)
    sp.add_argument("--sigma", type=float, default=0.5)
    sp.add_argument("--dropout", type=float, default=0.2)
    sp.add_argument("--spurious", type=float, default=0.1)
    sp.add_argument("--erosion", type=float, default=0.2)
    sp.add_argument("--binary", action="store_true", help="write packed binary templates")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("bench", help="measure matching throughput")
    sp.add_argument("--pool-dir")
    sp.add_argument("--fingers", type=int, default=20)
    sp.add_argument("--minutiae", type=int, default=40)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--binary", action="store_true")
    sp.add_argument("--pairs", type=int, default=500)
    preset_args(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dmdmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TemplateError, ValueError, OSError, UnicodeDecodeError) as exc:
        print(f"dmdmatch: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
