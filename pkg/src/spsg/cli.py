"""Command-line interface: ``spsg segment|eval|bench|features``."""

import argparse
import json
import logging
import sys
import warnings

from spsg import __version__
from spsg import pipeline as P
from spsg.evaluation import evaluate_dirs, format_table

log = logging.getLogger("spsg")


def _add_run_options(p, solver=True):
    p.add_argument("image", nargs="?", help="input image (PNG/PPM)")
    p.add_argument("--config", help="flat 'key = value' file; command-line flags take precedence")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--superpixels", metavar="PATH", help="import a label map (16-bit PNG or CSV)")
    src.add_argument("--slic", type=int, metavar="N", help="built-in superpixels with about N regions")
    p.add_argument("--compactness", type=float, help="built-in superpixel compactness (default 10)")
    p.add_argument("--seed", type=int, help="seed for superpixels and dictionary (default 0)")
    if not solver:
        return
    p.add_argument("--boundary", metavar="PATH", help="8-bit PNG of boundary strengths")
    p.add_argument("--feature-cache", metavar="PATH", help="read/write features as an SPSG matrix")
    p.add_argument("--dict-cache", metavar="PATH", help="read/write the dictionary as an SPSG matrix")
    p.add_argument("--dict-size", type=int, help="dictionary words l (default 20)")
    p.add_argument("--gamma", type=float, help=f"spatial weight (default {P.M.DEFAULT_GAMMA})")
    p.add_argument("--sigma-x", help="'auto' or a positive feature-distance scale")
    p.add_argument("--mu", type=float, help="augmented Lagrangian parameter (default 1)")
    p.add_argument("--tol", type=float, help="combined-residual tolerance")
    p.add_argument("--max-iters", type=int, help="ADMM iteration cap")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spsg", description="Sparse word selection segmentation of superpixel graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment an image over an alpha sweep")
    _add_run_options(seg)
    grid = seg.add_mutually_exclusive_group()
    grid.add_argument("--alpha", help="single alpha (lambda = alpha * lambda_max)")
    grid.add_argument("--alpha-grid", metavar="A,B,...", help="comma-separated alphas")
    seg.add_argument("--no-warm-start", dest="warm_start", action="store_const", const=False,
                     help="solve every alpha from scratch (allows SPSG_THREADS workers)")
    seg.add_argument("--trace", metavar="CSV", help="write (alpha, iteration, residual, objective)")
    seg.add_argument("--out", help="output directory (default ./out)")

    ev = sub.add_parser("eval", help="score segment outputs against ground truth")
    ev.add_argument("--pred-dir", required=True, help="one subdirectory per image")
    ev.add_argument("--gt-dir", required=True, help="one subdirectory of label maps per image")
    ev.add_argument("--report", help="write the full report as JSON")

    bench = sub.add_parser("bench", help="median wall time per pipeline stage")
    _add_run_options(bench)
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--bench-alpha", type=float, default=0.5, help="alpha of the timed solve")
    bench.add_argument("--csv", help="write timings here instead of stdout")

    feat = sub.add_parser("features", help="write superpixel features as an SPSG matrix")
    _add_run_options(feat, solver=False)
    feat.add_argument("--out", required=True, help="output .spsg path")
    return parser


_RUN_KEYS = {f.name for f in P.fields(P.RunConfig)}


def _config_from(args):
    overrides = {k: v for k, v in vars(args).items() if k in _RUN_KEYS and v is not None}
    return P.load_config(args.config, overrides)


def cmd_segment(args):
    cfg = _config_from(args)
    index = P.run_segment(cfg)
    for e in index["entries"]:
        flag = "" if e["converged"] else "  (not converged)"
        print(f"alpha={e['alpha']:.4f}  K={e['K']}  segments={e['segments']}{flag}")
    print(f"wrote {len(index['entries'])} label maps to {cfg.out}")
    return 0


def cmd_eval(args):
    report = evaluate_dirs(args.pred_dir, args.gt_dir)
    data = report.to_dict()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    print(format_table(data["aggregates"]))
    if report.skipped:
        print(f"skipped {len(report.skipped)} image(s) without ground truth", file=sys.stderr)
    return 0


def cmd_bench(args):
    cfg = _config_from(args)
    if not cfg.image:
        raise ValueError("an input image is required")
    if bool(cfg.superpixels) == bool(cfg.slic):
        raise ValueError("give exactly one superpixel source: --superpixels PATH or --slic N")
    medians, samples, meta = P.run_bench(cfg, repeats=args.repeats, alpha=args.bench_alpha)
    lines = ["stage,repeats,median_s,min_s,max_s,n,l"]
    for stage, med in medians.items():
        v = samples[stage]
        lines.append(f"{stage},{len(v)},{med:.6f},{min(v):.6f},{max(v):.6f},{meta['n']},{meta['l']}")
    text = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_features(args):
    cfg = _config_from(args)
    if bool(cfg.superpixels) == bool(cfg.slic):
        raise ValueError("give exactly one superpixel source: --superpixels PATH or --slic N")
    X = P.run_features(cfg, args.out)
    print(f"wrote {X.shape[0]}x{X.shape[1]} feature matrix to {args.out}")
    return 0


COMMANDS = {"segment": cmd_segment, "eval": cmd_eval, "bench": cmd_bench, "features": cmd_features}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"spsg {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    warnings.simplefilter("default")
    sys.exit(main())
