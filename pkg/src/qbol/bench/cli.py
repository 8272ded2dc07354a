"""Command-line entry point: ``qbol run | grid-info | verify-bounds``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from qbol.dynamic import GridConfig, grid_axes
from qbol.bench.runner import ConfigError, find_runs, run_experiment, verify_run


def _cmd_run(args) -> int:
    try:
        dirs = run_experiment(args.config, args.out)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    bad = 0
    for d in dirs:
        s = json.loads((d / "summary.json").read_text(encoding="utf-8"))
        bad += s["bound_violations"]
        regrets = ", ".join(f"{k}={v['regret']:.6g}" for k, v in s["paths"].items())
        print(f"{d}: T={s['T']} seed={s['seed']} {regrets} bound_violations={s['bound_violations']}")
    return 0 if bad == 0 else 1


def _cmd_grid(args) -> int:
    try:
        cfg = GridConfig(
            eps=args.eps, G_max=args.gmax, L_max=args.lmax, T=args.T, K=args.K, smooth=args.smooth, max_exponent_cap=args.cap
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    etas, Ds = grid_axes(cfg)
    if args.json:
        print(json.dumps({"eta": etas, "D": Ds, "size": len(etas) * len(Ds)}))
        return 0
    kind = "smooth" if cfg.smooth else "non-smooth"
    print(f"{kind} grid, eps={cfg.eps} G_max={cfg.G_max} L_max={cfg.L_max} T={cfg.T} K={cfg.K}")
    print(f"S_eta ({len(etas)}): " + " ".join(repr(e) for e in etas))
    print(f"S_D   ({len(Ds)}): " + " ".join(repr(d) for d in Ds))
    print(f"|S| = {len(etas) * len(Ds)}")
    return 0


def _cmd_verify(args) -> int:
    runs = find_runs(args.run)
    if not runs:
        print(f"error: no run.csv under {args.run}", file=sys.stderr)
        return 2
    ok = True
    for r in runs:
        try:
            rep = verify_run(r)
        except (ConfigError, FileNotFoundError, KeyError, ValueError) as e:
            print(f"{r}: FAIL ({e})")
            ok = False
            continue
        status = "OK" if rep.ok else "FAIL"
        detail = ", ".join(f"{k}: {v}" for k, v in rep.checked.items()) or "no bound columns"
        print(f"{r}: {status} rows={rep.rows} violations={rep.violations} ({detail})")
        for p in rep.problems:
            print(f"  {p}")
        ok &= rep.ok
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qbol", description="Online learning with quadratically bounded losses")
    ap.add_argument("-v", "--verbose", action="store_true", help="log warnings from the learners")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=_cmd_run)

    g = sub.add_parser("grid-info", help="print the (eta, D) grid of the dynamic learner")
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--gmax", type=float, required=True)
    g.add_argument("--lmax", type=float, required=True)
    g.add_argument("--T", type=int, required=True)
    g.add_argument("--K", type=float, default=8.0)
    g.add_argument("--cap", type=int, default=40, help="radius exponent cap")
    g.add_argument("--smooth", action="store_true")
    g.add_argument("--json", action="store_true")
    g.set_defaults(fn=_cmd_grid)

    v = sub.add_parser("verify-bounds", help="re-check bound assertions from run logs")
    v.add_argument("--run", required=True)
    v.set_defaults(fn=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
