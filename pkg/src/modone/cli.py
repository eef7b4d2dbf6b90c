"""Command-line front end.

Every run writes its data files plus ``manifest.json`` holding the fully
resolved parameters.  ``--from-manifest`` replays a run; data files and the
manifest are byte-identical on replay (wall-clock goes to ``timing.json``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from . import __version__
from . import fourier, localstats, montecarlo, oscint, seqgen
from .errors import ModOneError
from .oscint import AlphaInterval
from .seqgen import PrecisionPolicy, SequenceSpec
from .windows import parse_window

OUT_ENV = "MODONE_OUT"
EXIT_IO = 5


# ----------------------------------------------------------------- helpers


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _grid(text: str) -> List[float]:
    """``a:b:step`` (inclusive) or a comma list."""
    if ":" in text:
        a, b, h = map(float, text.split(":"))
        n = int(math.floor((b - a) / h + 1e-9))
        return [a + i * h for i in range(n + 1)]
    return _floats(text)


def _policy(args) -> PrecisionPolicy:
    if args.precision == "auto":
        return PrecisionPolicy.auto(args.target_err or 2.0**-60)
    return PrecisionPolicy.fixed(int(args.precision), args.target_err)


def _points(args):
    if getattr(args, "points", None):
        p = Path(args.points)
        return seqgen.read_binary(p) if p.suffix == ".bin" else seqgen.read_text(p)
    return seqgen.frac_parts(SequenceSpec(args.alpha, args.beta, args.N), _policy(args))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


def _dump_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


# ----------------------------------------------------------------- subcommands


def cmd_gen(args, out: Path) -> List[str]:
    pts = seqgen.frac_parts(SequenceSpec(args.alpha, args.beta, args.N), _policy(args), keep_exact=args.format == "txt")
    name = "points.bin" if args.format == "bin" else "points.txt"
    (seqgen.write_binary if args.format == "bin" else seqgen.write_text)(pts, out / name)
    _dump_json(out / "points.json", {"N": pts.N, "bits": pts.bits, "err_bound": pts.err_bound})
    return [name, "points.json"]


def cmd_corr(args, out: Path) -> List[str]:
    window = parse_window(args.window, args.k)
    ref = localstats.poisson_reference(window)
    rows = []
    alphas = _floats(args.alpha_grid) if args.alpha_grid else [args.alpha]
    for a in alphas:
        if args.points:
            pts = _points(args)
        else:
            pts = seqgen.frac_parts(SequenceSpec(a, args.beta, args.N), _policy(args))
        est = localstats.k_level_correlation(pts, window, args.k)
        rows.append((a if not args.points else "external", est.value, ref))
    localstats.write_grid_csv(rows, out / "corr.csv")
    return ["corr.csv"]


def cmd_gaps(args, out: Path) -> List[str]:
    pts = _points(args)
    xs = _grid(args.x_grid)
    dist = localstats.gap_distribution(pts, xs, circular=args.circular)
    rows = []
    for x, g in zip(xs, dist.g_values):
        row = [x, float(g)]
        if args.K:
            lo, hi = localstats.gap_sandwich(pts, x, args.K)
            row += [lo, hi]
        rows.append(row)
    header = ["x", "g"] + (["lower", "upper"] if args.K else [])
    _write_rows(out / "gaps.csv", header, rows)
    return ["gaps.csv"]


def cmd_fourier(args, out: Path) -> List[str]:
    spec = SequenceSpec(args.alpha, args.beta, args.N)
    window = parse_window(args.window, 2)
    M = math.floor(args.N ** (1 + args.eps))
    n_max = args.n_max or M
    table = fourier.PhaseTable(spec, max(n_max, M), _policy(args))
    ns = np.arange(1, n_max + 1)
    fourier.write_spectrum_csv(out / "spectrum.csv", ns, table.sums(ns))
    summary = fourier.cross_validate(window, spec, args.eps, _policy(args))
    fourier.write_crossval_json(out / "crossval.json", [summary])
    return ["spectrum.csv", "crossval.json"]


def cmd_oscint(args, out: Path) -> List[str]:
    J = AlphaInterval(args.A)
    records = []
    if args.ensemble:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([args.seed, args.ensemble])))
        phases = [oscint.random_phase(rng, int(rng.integers(2, args.max_d + 1)), (2, args.N)) for _ in range(args.ensemble)]
    else:
        phase, _ = oscint.canonicalize(_floats(args.u), _floats(args.x))
        phases = [phase]
    for ph in phases:
        rep = oscint.vdc_check(ph, J, args.N, args.eps, args.grid_size, max_panels=args.max_panels,
                               on_budget="skip" if args.ensemble else "raise")
        records.append(oscint.report_record(ph, J, args.N, args.eps, rep))
    oscint.write_reports_json(out / "oscint.json", records if args.ensemble else records[0])
    files = ["oscint.json"]
    if args.curve and not args.ensemble:
        oscint.write_curve_csv(out / "curve.csv", phases[0], J, args.curve)
        files.append("curve.csv")
    return files


def cmd_variance(args, out: Path) -> List[str]:
    window = parse_window(args.window, args.k)
    plan = montecarlo.ExperimentPlan(
        args.k, AlphaInterval(args.A), tuple(_ints(args.N_grid)), args.samples, args.seed,
        window, args.beta, _policy(args),
    )
    ckpt = out / "checkpoint.json"
    done: Dict[int, dict] = {}
    if ckpt.exists():
        saved = json.loads(ckpt.read_text())
        if saved.get("plan") == plan.describe():
            done = {int(r["N"]): r for r in saved["rows"]}
    rows_so_far = list(done.values())

    def save(row):
        rows_so_far.append(row)
        _dump_json(ckpt, {"plan": plan.describe(), "rows": rows_so_far})

    run = montecarlo.run_plan(plan, args.workers, done, save)
    montecarlo.write_variance_csv(out / "variance.csv", run.rows)
    montecarlo.write_manifest(out / "experiment.json", montecarlo.manifest(run))
    if ckpt.exists():
        ckpt.unlink()
    return ["variance.csv", "experiment.json"]


def cmd_report(args, out: Path) -> List[str]:
    rows = []
    for m in args.manifests:
        data = json.loads(Path(m).read_text())
        params = data.get("parameters", {})
        flat = ";".join(f"{k}={params[k]}" for k in sorted(params) if k not in ("out", "workers"))
        rows.append((str(m), data.get("subcommand", "?"), flat, ";".join(data.get("artifacts", []))))
    _write_rows(out / "summary.csv", ["manifest", "subcommand", "parameters", "artifacts"], rows)
    return ["summary.csv"]


COMMANDS: Dict[str, Callable] = {
    "gen": cmd_gen,
    "corr": cmd_corr,
    "gaps": cmd_gaps,
    "fourier": cmd_fourier,
    "oscint": cmd_oscint,
    "variance": cmd_variance,
    "report": cmd_report,
}


# ----------------------------------------------------------------- parser


def _seq_args(p, alpha_required=True):
    p.add_argument("--alpha", type=float, required=alpha_required)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--N", type=int, required=alpha_required)


def _precision_args(p):
    p.add_argument("--precision", default="auto", help="'auto' or a bit count")
    p.add_argument("--target-err", type=float, default=None,
                   help="absolute error target (auto default 2^-60; fixed mode checks it when given)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modone", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--from-manifest", default=None, help="replay the run recorded in a manifest")
    parser.add_argument("--out", dest="top_out", default=None, help="output directory for a replay")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("gen", parents=[common], help="write fractional parts to a file")
    _seq_args(p)
    _precision_args(p)
    p.add_argument("--format", choices=["bin", "txt"], default="bin")

    p = sub.add_parser("corr", parents=[common], help="R_k for one alpha or a sweep")
    _seq_args(p, alpha_required=False)
    _precision_args(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--window", default="box:-0.5:0.5")
    p.add_argument("--alpha-grid", default=None)
    p.add_argument("--points", default=None)

    p = sub.add_parser("gaps", parents=[common], help="gap distribution and simplex bounds")
    _seq_args(p, alpha_required=False)
    _precision_args(p)
    p.add_argument("--points", default=None)
    p.add_argument("--x-grid", default="0:3:0.25")
    p.add_argument("--K", type=int, default=0)
    p.add_argument("--circular", action="store_true")

    p = sub.add_parser("fourier", parents=[common], help="exponential-sum spectrum and cross-check")
    _seq_args(p)
    _precision_args(p)
    p.add_argument("--window", default="gauss:1:8")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--n-max", type=int, default=0)

    p = sub.add_parser("oscint", parents=[common], help="repulsion and oscillatory-integral reports")
    p.add_argument("--u", default=None)
    p.add_argument("--x", default=None)
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--grid-size", type=int, default=10_000)
    p.add_argument("--curve", type=int, default=0, help="also write derivative curves at this many points")
    p.add_argument("--ensemble", type=int, default=0, help="random phases instead of --u/--x")
    p.add_argument("--max-d", type=int, default=4)
    p.add_argument("--max-panels", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("variance", parents=[common], help="Monte Carlo expectation and variance over alpha")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--N-grid", required=True)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--window", default="gauss:1:8")
    p.add_argument("--beta", type=float, default=1.0)
    _precision_args(p)

    p = sub.add_parser("report", parents=[common], help="merge manifests into one table")
    p.add_argument("manifests", nargs="+")
    return parser


def _validate(args, parser) -> None:
    cmd = args.subcommand
    if cmd in ("corr", "gaps") and not args.points and (args.N is None or (args.alpha is None and not getattr(args, "alpha_grid", None))):
        parser.error(f"{cmd} needs --alpha/--N or --points")
    if cmd == "oscint" and not args.ensemble and (args.u is None or args.x is None):
        parser.error("oscint needs --u and --x (or --ensemble)")


def run(args) -> int:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    files = COMMANDS[args.subcommand](args, out)
    skip = ("subcommand", "from_manifest", "top_out", "out", "workers")
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    if "precision" in params:
        params["resolved_precision"] = _policy(args).describe()
    manifest = {
        "subcommand": args.subcommand,
        "parameters": params,
        "artifacts": files,
        "version": __version__,
    }
    _dump_json(out / "manifest.json", manifest)
    _dump_json(out / "timing.json", {"wall_clock_s": time.time() - t0, "started_unix": t0})
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.from_manifest:
            data = json.loads(Path(args.from_manifest).read_text())
            replay = argparse.Namespace(**data["parameters"])
            replay.subcommand = data["subcommand"]
            replay.out = args.top_out or str(Path(args.from_manifest).parent)
            replay.workers = os.cpu_count() or 1
            return run(replay)
        if not args.subcommand:
            parser.print_usage(sys.stderr)
            return 2
        _validate(args, parser)
        return run(args)
    except ModOneError as exc:
        print(f"modone {args.subcommand or ''}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"modone: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
