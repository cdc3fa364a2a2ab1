"""Command-line front end.

Exit codes: 0 = certified / success, 1 = invalid input, 2 = no certificate
found (which is *not* a proof of instability), 3 = simulation audit failed.
Set SLDS_LOG=debug for verbose logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import mlf as mlf_mod
from . import posreal as pr
from .mlf import (
    certificate_to_json,
    find_mlf,
    load_certificate,
    save_certificate,
    verify_mlf,
)
from .model import is_well_posed, load_model, model_to_json, modes_hurwitz
from .polymat import polymatrix_from_json, polymatrix_to_json
from .sim import audit_mlf, asymptotic_check, signal_from_json, simulate, write_trace_csv

log = logging.getLogger("sldstab")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NO_CERT = 2
EXIT_AUDIT = 3

_TOLERANCE_KEYS = {"eps", "budget", "audit_rel"}


def _load_tolerances(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    unknown = set(doc) - _TOLERANCE_KEYS
    if unknown:
        raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
    for k, v in doc.items():
        if not (isinstance(v, (int, float)) and v > 0):
            raise ValueError(f"tolerance '{k}' must be positive")
    return doc


def _setup_logging() -> None:
    level = os.environ.get("SLDS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def cmd_check(args) -> int:
    model = load_model(args.model)
    hur = modes_hurwitz(model)
    if not all(hur):
        bad = [i + 1 for i, h in enumerate(hur) if not h]
        print(f"invalid: modes {bad} are not Hurwitz (det R has roots in Re >= 0)")
        return EXIT_INVALID
    verdicts, ok = is_well_posed(model)
    if not ok:
        for (k, l), v in sorted(verdicts.items()):
            if not v:
                print(f"invalid: transition {k}->{l} is not well-posed "
                      "(F+ rank deficient)")
        return EXIT_INVALID
    if args.verify_only:
        cert = load_certificate(args.verify_only)
        ok, margins = verify_mlf(model, cert)
        for name, m in sorted(margins.items()):
            print(f"  {name}: margin {m:.6e}")
        print("certificate verifies" if ok else "certificate FAILS verification")
        return EXIT_OK if ok else EXIT_NO_CERT
    tols = _load_tolerances(args.tolerances)
    eps = args.eps if args.eps is not None else tols.get("eps")
    budget = args.budget if args.budget is not None else int(tols.get("budget", 50000))
    routes = (
        ["exact", "conservative"] if args.route == "all" else [args.route]
    )
    cert = None
    for route in routes:
        try:
            c = find_mlf(
                model, conservative=(route == "conservative"), eps=eps, budget=budget
            )
        except ValueError as exc:
            log.warning("route %s failed: %s", route, exc)
            print(f"route {route}: {exc}")
            continue
        print(f"route {route}: feasible={c.feasible} "
              f"(iterations {c.solver['iterations']})")
        if c.feasible:
            cert = c
            break
    if cert is None:
        print("no certificate found; this does NOT prove instability "
              "(quadratic MLFs are sufficient only)")
        return EXIT_NO_CERT
    okv, margins = verify_mlf(model, cert)
    worst = min(margins.values())
    print(f"certified stable; {len(margins)} constraints, worst margin {worst:.3e}")
    if args.out:
        save_certificate(cert, args.out)
        print(f"certificate written to {args.out}")
    return EXIT_OK if okv else EXIT_NO_CERT


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    with open(args.signal) as fh:
        signal = signal_from_json(json.load(fh))
    x0 = np.array([float(v) for v in args.x0.split(",")])
    cert = load_certificate(args.cert) if args.cert else None
    trace = simulate(model, signal, x0, args.t_end, args.dt, certificate=cert)
    if args.out:
        write_trace_csv(trace, args.out, events_path=args.out + ".events.json")
        print(f"trace written to {args.out}")
    if trace.truncated:
        print("trajectory truncated: inconsistent transition traversed")
        return EXIT_INVALID
    print(f"samples: {len(trace.times)}, events: {len(trace.events)}, "
          f"decayed: {asymptotic_check(trace)}")
    if cert is not None:
        report = audit_mlf(trace, cert)
        print(f"audit: ok={report['ok']} violations={report['violations']} "
              f"worst_interval={report['worst_interval_increase']:.3e} "
              f"worst_switch={report['worst_switch_increase']:.3e}")
        if not report["ok"]:
            return EXIT_AUDIT
    return EXIT_OK


def _load_pair(args):
    with open(args.r1) as fh:
        R1 = polymatrix_from_json(json.load(fh))
    with open(args.r2) as fh:
        R2 = polymatrix_from_json(json.load(fh))
    return R1, R2


def cmd_posreal(args) -> int:
    R1, R2 = _load_pair(args)
    if args.action == "sprcheck":
        ok, witness = pr.is_strictly_positive_real(R2, R1)
        print(f"R2 R1^-1 strictly positive real: {ok}")
        if not ok:
            print(f"witness: {witness}")
        return EXIT_OK if ok else EXIT_NO_CERT
    std = pr.build_standard_slds(R1, R2)
    try:
        cert = pr.mlf_from_positive_real(std)
    except ValueError as exc:
        print(f"no certificate: {exc}")
        return EXIT_NO_CERT
    if args.action == "mlf":
        if args.out:
            save_certificate(cert, args.out)
            base, ext = os.path.splitext(args.out)
            model_path = base + "_model" + (ext or ".json")
            with open(model_path, "w") as fh:
                json.dump(model_to_json(std.model), fh, indent=2)
            print(f"certificate -> {args.out}, model -> {model_path}")
        else:
            print(json.dumps(certificate_to_json(cert), indent=2))
        return EXIT_OK
    # action == "complete"
    M = pr.positive_real_completion(std, cert)
    doc = polymatrix_to_json(M)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
        print(f"completion written to {args.out}")
    else:
        print(json.dumps(doc))
    return EXIT_OK


def cmd_standard(args) -> int:
    R1, R2 = _load_pair(args)
    std = pr.build_standard_slds(R1, R2)
    doc = model_to_json(std.model)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
        print(f"standard model written to {args.out}")
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slds", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="find/verify a stability certificate")
    c.add_argument("model")
    c.add_argument("--route", choices=["exact", "conservative", "all"], default="all")
    c.add_argument("--out")
    c.add_argument("--eps", type=float)
    c.add_argument("--budget", type=int)
    c.add_argument("--tolerances")
    c.add_argument("--verify-only", metavar="CERT")
    c.set_defaults(fn=cmd_check)

    s = sub.add_parser("simulate", help="exact switched simulation")
    s.add_argument("model")
    s.add_argument("--signal", required=True)
    s.add_argument("--x0", required=True, help="comma-separated initial state")
    s.add_argument("--t-end", type=float, required=True)
    s.add_argument("--dt", type=float, required=True)
    s.add_argument("--cert")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_simulate)

    q = sub.add_parser("posreal", help="positive-real route for two-mode pairs")
    q.add_argument("action", choices=["sprcheck", "mlf", "complete"])
    q.add_argument("--r1", required=True)
    q.add_argument("--r2", required=True)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_posreal)

    t = sub.add_parser("standard", help="emit the standard two-mode SldsModel")
    t.add_argument("--r1", required=True)
    t.add_argument("--r2", required=True)
    t.add_argument("--out")
    t.set_defaults(fn=cmd_standard)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
