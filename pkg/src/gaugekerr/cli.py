"""Command-line front end.

    gaugekerr forward|reverse|avogadro|histogram|oracle [options]

Exit status: 0 on success or a PASS verdict, 1 on a FAIL verdict, 2 on a
runtime error.
"""

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

from .harness import (
    PRESETS,
    ExperimentConfig,
    _output_stem,
    oracle_curve,
    run_avogadro,
    run_forward,
    run_histograms,
    run_reversal,
)
from .sde import ADAPTIVE, CONSTANT, GaugeConfig, EnsembleDivergedError

log = logging.getLogger("gaugekerr")

OVERRIDES = {
    "n_bar": "n-bar",
    "trajectories": "trajectories",
    "tau_R": "tau-r",
    "dt_tau": "dt",
    "seed": "seed",
    "frame": "frame",
    "output_path": "out",
    "record_every": "record-every",
    "workers": "workers",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    common.add_argument("--n-bar", type=float)
    common.add_argument("--trajectories", type=int)
    common.add_argument("--tau-r", type=float)
    common.add_argument("--dt", type=float, help="step in dimensionless tau units")
    common.add_argument("--gauge", choices=[CONSTANT, ADAPTIVE])
    common.add_argument("--g0", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--frame", choices=["lab", "rotating"])
    common.add_argument("--record-every", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output stem; default $GAUGEKERR_OUTPUT_DIR/<command>")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="gaugekerr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", parents=[common], help="forward collapse to 2 tau_R")
    rev = sub.add_parser("reverse", parents=[common], help="time-reversal test")
    rev.add_argument("--control", action="store_true", help="do not negate kappa")
    sub.add_parser("avogadro", parents=[common], help="rotating-frame adaptive-gauge reversal")
    hist = sub.add_parser("histogram", parents=[common], help="log10|alpha Omega| histograms")
    hist.add_argument("--taus", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    hist.add_argument("--bin-width", type=float, default=0.1)
    orc = sub.add_parser("oracle", parents=[common], help="exact <a> curves")
    orc.add_argument("--points", type=int, default=201)
    return p


def resolve_config(args):
    if args.preset:
        cfg = PRESETS[args.preset]
    elif args.command == "avogadro":
        cfg = PRESETS["mole"]
    else:
        cfg = ExperimentConfig()
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **data})
    changes = {}
    for field_name, flag in OVERRIDES.items():
        value = getattr(args, flag.replace("-", "_"))
        if value is not None:
            changes[field_name] = value
    gauge = cfg.gauge
    if args.gauge is not None:
        gauge = replace(gauge, mode=args.gauge)
    if args.g0 is not None:
        gauge = replace(gauge, g0=args.g0)
    n_bar = changes.get("n_bar", cfg.n_bar)
    tau_R = changes.get("tau_R", cfg.tau_R)
    changes["gauge"] = GaugeConfig(gauge.mode, gauge.g0, tau_R, n_bar)
    return replace(cfg, **changes)


def _print_result(result):
    for name, c in result["checks"].items():
        print(f"  {name}: {c['value']:.6g} +/- {c['err']:.3g} (target {c['target']:.6g}, z={c['z']:+.2f})")
    print(result["verdict"])


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        log.info("config %s", cfg.to_json())
        if args.command == "forward":
            rec = run_forward(cfg, write=True)
            if "oracle" in rec.metadata:
                frac = rec.metadata["oracle"]["fraction_within_3sigma"]
                print(f"oracle agreement within 3 sigma: {frac:.1%} of {len(rec)} points")
            return 0
        if args.command == "reverse":
            rec = run_reversal(cfg, negate=not args.control, write=True)
            _print_result(rec.metadata["result"])
            return 0 if rec.metadata["result"]["verdict"] == "PASS" else 1
        if args.command == "avogadro":
            rec = run_avogadro(cfg, write=True)
            _print_result(rec.metadata["result"])
            return 0 if rec.metadata["result"]["verdict"] == "PASS" else 1
        if args.command == "histogram":
            out = run_histograms(cfg, args.taus, args.bin_width, write=True)
            for protocol, snaps in out.items():
                for tau, h, _ in snaps:
                    print(f"{protocol} tau={tau:g}: {len(h.occupied())} bins, span {h.span():.2f} decades")
            return 0
        if args.command == "oracle":
            curve = oracle_curve(cfg, args.points)
            stem = _output_stem(cfg, "oracle")
            stem.parent.mkdir(parents=True, exist_ok=True)
            with open(stem.with_suffix(".csv"), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["tau", "X_forward", "Y_forward", "X_reversed", "Y_reversed"])
                for t, f, r in zip(curve["tau"], curve["forward"], curve["reversed"]):
                    w.writerow([repr(float(t)), repr(f.real), repr(f.imag), repr(r.real), repr(r.imag)])
            return 0
    except EnsembleDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.record is not None and len(exc.record):
            print(f"last healthy row: {exc.record.last}", file=sys.stderr)
        return 2
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
