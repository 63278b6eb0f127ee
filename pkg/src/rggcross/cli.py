"""Command-line front end: ``constants``, ``predict``, ``experiment`` and ``search``.

Exit status is 0 on success, 1 when a verification check fails and 2 on
usage, configuration or input errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, bundled_configs, load_config, parse_count
from .crossings import drawing_of
from .experiments import plane_search, predictions_for, run_checks, run_experiment, to_csv
from .geometry import BodyKind, ConvexBody, Plane2, kappa, sample_plane_haar
from .pointprocess import GraphFormatError, RegimeSchedule, read_graph
from .records import dumps, loads
from .stats import McEstimate, agree
from .stress import WeightKind
from .theory import Constants, I2_ball_exact, I3_ball_exact, compute_constants, predict_moments

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return str(path)


def _manifest(command: str, config: dict, seed, outputs: list[str], started: float) -> dict:
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "wall_clock_seconds": time.perf_counter() - started,
        "outputs": outputs,
    }


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _body(args) -> ConvexBody:
    if args.d < 2:
        raise UsageError(f"--d must be >= 2, got {args.d}")
    return ConvexBody(BodyKind(args.body), args.d)


def _plane(args, d: int) -> Plane2:
    if args.plane == "coordinate":
        return Plane2.coordinate(d)
    return sample_plane_haar(d, np.random.default_rng(args.plane_seed))


def _load_constants(path) -> Constants:
    try:
        return Constants.from_record(loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read constants file {path}: {exc}") from None


def constants_checks(C: Constants, W: ConvexBody) -> dict:
    """Sanity checks on an estimated constants record, each PASS or FAIL at 4 sigma."""
    d = C.d
    cap = 2 * math.pi * kappa(d) ** 2
    out = {
        "c_d_cap": C.c_d.value - 4 * C.c_d.std_error <= cap,
        "c_prime_d_cap": C.c_prime_d.value - 4 * C.c_prime_d.std_error <= 2 * math.pi * kappa(d) * C.c_d.value
        + 4 * 2 * math.pi * kappa(d) * C.c_d.std_error,
    }
    if W.kind is BodyKind.BALL and d > 2:
        out["I2_analytic"] = agree(C.I2, McEstimate.exact(I2_ball_exact(W)))
        out["I3_analytic"] = agree(C.I3, McEstimate.exact(I3_ball_exact(W)))
    return {k: "PASS" if v else "FAIL" for k, v in out.items()}


def cmd_constants(args) -> int:
    started = time.perf_counter()
    W = _body(args)
    L = _plane(args, W.dim)
    C = compute_constants(W, L, args.n_samples, args.seed, WeightKind(args.weight))
    rec = C.to_record()
    rec["checks"] = constants_checks(C, W)
    out = Path(args.out)
    outputs = [_write(out, dumps(rec) + "\n")]
    config = {"d": args.d, "body": args.body, "plane": args.plane, "plane_seed": args.plane_seed,
              "n_samples": args.n_samples, "weight": args.weight}
    _write(_manifest_path(out), dumps(_manifest("constants", config, args.seed, outputs, started)) + "\n")
    for name in ("c_d", "c_prime_d", "I2", "I3", "S1", "S2", "K"):
        est = getattr(C, name)
        print(f"{name:10s} {est.value:.6g} +/- {est.std_error:.2g}")
    for name, status in rec["checks"].items():
        print(f"{status} {name}")
    return EXIT_OK if all(s == "PASS" for s in rec["checks"].values()) else EXIT_CHECK_FAILED


def cmd_predict(args) -> int:
    started = time.perf_counter()
    C = _load_constants(args.constants)
    W = ConvexBody(BodyKind(C.body), C.d)
    L = Plane2(np.asarray(C.plane)) if C.plane else Plane2.coordinate(C.d)
    if args.delta is not None and args.schedule is not None:
        raise UsageError("give at most one of --delta and --schedule")
    if args.delta is not None:
        delta = args.delta
    elif args.schedule is not None:
        try:
            delta = RegimeSchedule.parse(args.schedule).delta_at(args.t, C.d)
        except ValueError as exc:
            raise UsageError(f"--schedule: {exc}") from None
    else:
        raise UsageError("one of --delta or --schedule is required")
    if args.t <= 0 or delta <= 0:
        raise UsageError("t and delta must be positive")
    P = predict_moments(W, L, args.t, delta, C)
    rec = {"t": args.t, "delta": delta, **P.as_dict()}
    text = dumps(rec) + "\n"
    outputs = []
    if args.out:
        out = Path(args.out)
        outputs.append(_write(out, text))
        config = {"constants": str(args.constants), "t": args.t, "delta": delta}
        _write(_manifest_path(out), dumps(_manifest("predict", config, C.seed, outputs, started)) + "\n")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    started = time.perf_counter()
    try:
        entries = load_config(args.config)
    except FileNotFoundError as exc:
        raise UsageError(f"config: {exc}") from None
    if args.section:
        entries = [s for s in entries if s.config.name == args.section]
        if not entries:
            raise UsageError(f"config: no section named {args.section!r}")
    out_dir = Path(args.out_dir)
    workers = args.workers or os.cpu_count() or 1
    failed = False
    for entry in entries:
        cfg = entry.config
        sub = out_dir / cfg.name if len(entries) > 1 else out_dir
        if args.constants:
            C = _load_constants(args.constants)
            if C.d != cfg.d or C.body != cfg.body.kind.value:
                raise UsageError("constants file does not match the configured body")
        else:
            C = compute_constants(cfg.body, cfg.fixed_plane(), entry.constants_samples, cfg.seed, cfg.weight)
        summary, samples = run_experiment(cfg, workers)
        checks = run_checks(cfg, summary, samples, C)
        predictions = {f"{t:.17g}": predictions_for(cfg, C, t).as_dict() for t in cfg.t_grid}
        outputs = [
            _write(sub / "raw.csv", to_csv(samples)),
            _write(sub / "summary.json", dumps({
                "config": cfg.echo(), "constants": C.to_record(),
                "summary": [s.as_dict() for s in summary], "predictions": predictions,
            }) + "\n"),
            _write(sub / "checks.json", dumps([c.as_dict() for c in checks]) + "\n"),
        ]
        config = {**cfg.echo(), "constants_samples": entry.constants_samples,
                  "constants_file": args.constants}
        _write(sub / "manifest.json", dumps(_manifest("experiment", config, cfg.seed, outputs, started)) + "\n")
        for c in checks:
            print(f"{c.status} {cfg.name}/{c.name}")
            failed |= c.status == "FAIL"
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_search(args) -> int:
    started = time.perf_counter()
    try:
        G = read_graph(args.graph)
    except (GraphFormatError, OSError) as exc:
        raise UsageError(f"{args.graph}: {exc}") from None
    if args.K < 1:
        raise UsageError("--K must be >= 1")
    res = plane_search(G, args.K, np.random.default_rng(args.seed), WeightKind(args.weight))
    out_dir = Path(args.out_dir)
    D = drawing_of(G, res.planes[res.best_cr])
    drawing = [f"{len(D.positions)}"]
    drawing += [f"{x:.17g} {y:.17g}" for x, y in D.positions]
    drawing += [f"{D.m}"] + [f"{i} {j}" for i, j in D.edges]
    rec = {"n": G.n, "m": G.m, "d": G.dim, "delta": G.delta, **res.report()}
    outputs = [
        _write(out_dir / "planes.csv", res.table()),
        _write(out_dir / "best_drawing.txt", "\n".join(drawing) + "\n"),
        _write(out_dir / "search.json", dumps(rec) + "\n"),
    ]
    config = {"graph": str(args.graph), "K": args.K, "weight": args.weight}
    _write(out_dir / "manifest.json", dumps(_manifest("search", config, args.seed, outputs, started)) + "\n")
    print(f"planes {len(res.planes)}  best cr {rec['best_cr']}  median cr {rec['median_cr']:g}")
    print(f"lemma floor {res.lemma_floor:g}  ratio bound {res.ratio_bound}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rggcross", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    weights = [w.value for w in WeightKind]

    p = sub.add_parser("constants", help="estimate the integrals entering the moment formulas")
    p.add_argument("--d", type=int, required=True, help="ambient dimension (>= 2)")
    p.add_argument("--body", choices=[b.value for b in BodyKind], default="ball")
    p.add_argument("--plane", choices=["coordinate", "random"], default="coordinate",
                   help="projection plane for the body-dependent integrals")
    p.add_argument("--plane-seed", type=int, default=0, help="seed of the random plane")
    p.add_argument("--n-samples", type=parse_count, default=10 ** 6, help="samples per estimator, e.g. 1e7")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--weight", choices=weights, default="inverse_square")
    p.add_argument("--out", default="constants.json")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("predict", help="leading-order moment predictions at one (t, delta)")
    p.add_argument("--constants", required=True, help="record written by the constants command")
    p.add_argument("--t", type=float, required=True, help="intensity, e.g. 1e3")
    p.add_argument("--delta", type=float, help="connection radius")
    p.add_argument("--schedule", help='radius schedule instead of --delta, e.g. "thermodynamic 5"')
    p.add_argument("--out", help="also write the record here")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", help="replicated simulation and verification checks")
    p.add_argument("--config", required=True,
                   help=f"config file, or a bundled name ({', '.join(bundled_configs())})")
    p.add_argument("--section", help="run only this section of the config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")
    p.add_argument("--constants", help="reuse a constants record instead of estimating one")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("search", help="best of K random projections of a graph file")
    p.add_argument("--graph", required=True, help="graph in the text dump format")
    p.add_argument("--K", type=int, default=50, help="number of random planes (ignored for d = 2)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--weight", choices=weights, default="inverse_square")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
