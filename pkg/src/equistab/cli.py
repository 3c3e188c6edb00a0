"""Command-line front end.

Exit codes: 0 stable certificate found, 1 error, 2 indecisive,
3 inconsistent (the three methods disagreed, which signals a defect).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .dynamics import IntegratorConfig, stability_probe
from .fields import validate_conservation
from .methods import Method, gradient_independence_report, run_methods
from .systems import DATA_DIR, REGISTRY, SystemFormatError, SystemValidationError, get_system


REPORT_SCHEMA = "equistab.report/1"

EXIT_STABLE, EXIT_ERROR, EXIT_INDECISIVE, EXIT_INCONSISTENT = 0, 1, 2, 3

METHOD_FLAGS = {
    "arnold": (Method.ARNOLD,),
    "ec": (Method.ENERGY_CASIMIR,),
    "or": (Method.ORTEGA_RATIU,),
    "all": tuple(Method),
}


def _default_seed() -> int:
    return int(os.environ.get("EQUISTAB_SEED", "0"))


def _add_system_args(p: argparse.ArgumentParser, equilibrium: bool = True) -> None:
    p.add_argument("--system", required=True, help="registry name, bundled file stem, or path to a system JSON file")
    if equilibrium:
        p.add_argument("--equilibrium", required=True, help="name of an equilibrium declared by the system")


def _add_probe_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="probe seed (default: $EQUISTAB_SEED or 0)")
    p.add_argument("--step", type=float, default=1e-2, help="RK4 step (default 1e-2)")
    p.add_argument("--horizon", type=float, default=50.0, help="integration time (default 50)")
    p.add_argument("--delta", type=float, default=1e-2, help="perturbation radius (default 1e-2)")
    p.add_argument("--epsilon", type=float, default=0.3, help="escape radius (default 0.3)")
    p.add_argument("--samples", type=int, default=200, help="number of perturbed starts (default 200)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="equistab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the energy methods (and a probe) at an equilibrium")
    _add_system_args(a)
    a.add_argument("--pivot", default="all", help="1-based pivot constant index, or 'all' (default)")
    a.add_argument("--method", choices=sorted(METHOD_FLAGS), default="all")
    a.add_argument("--lambdas", type=float, nargs="+", default=None, help="override the min-norm multipliers")
    a.add_argument("--json", metavar="PATH", help="write the JSON report to PATH ('-' for stdout)")
    a.add_argument("--no-probe", action="store_true", help="skip the trajectory probe")
    _add_probe_args(a)

    p = sub.add_parser("probe", help="trajectory-based stability probe only")
    _add_system_args(p)
    p.add_argument("--json", metavar="PATH")
    _add_probe_args(p)

    v = sub.add_parser("validate", help="check conservation laws and equilibria of a system")
    _add_system_args(v, equilibrium=False)

    sub.add_parser("list-systems", help="list built-in and bundled systems")
    return parser


def _write_json(report: dict[str, Any], path: str | None) -> None:
    if not path:
        return
    text = json.dumps(report, indent=2)
    if path == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _pivots(arg: str, k: int) -> list[int]:
    if arg == "all":
        return list(range(1, k + 1))
    pivot = int(arg)
    if not 1 <= pivot <= k:
        raise ValueError(f"pivot {pivot} outside 1..{k}")
    return [pivot]


def _probe(system, eq_name: str, args) -> dict[str, Any]:
    seed = _default_seed() if args.seed is None else args.seed
    config = IntegratorConfig(step=args.step, horizon=args.horizon)
    report = stability_probe(
        system.vector_field,
        system.equilibria[eq_name],
        args.delta,
        args.epsilon,
        args.samples,
        config,
        seed,
        constants=list(system.constants.values()),
    )
    return report.to_dict()


def _fmt_vec(v) -> str:
    return "(" + ", ".join(f"{x:.6g}" for x in v) + ")"


def _text_report(report: dict[str, Any], out) -> None:
    print(f"system {report['system']} at {report['equilibrium']} {_fmt_vec(report['coordinates'])}", file=out)
    for cert in report["pivots"]:
        prob = cert["problem"]
        line = f"pivot {prob['pivot']} ({prob['pivot_name']}): {cert['status']}"
        if "agreement" in cert:
            line += f", methods agree: {cert['agreement']}"
        if cert["margin"] is not None:
            line += f", margin {cert['margin']:.3g}"
        print(line, file=out)
        for v in cert["verdicts"]:
            detail = v["outcome"]
            if v["sign"] is not None:
                detail += f" (sign {v['sign']:+d})"
            if v["failure_stage"]:
                detail += f" [{v['failure_stage']}]"
            if v["multipliers"] is not None:
                detail += f" lambda={_fmt_vec(v['multipliers']['lambdas'])}"
            if v["eigenvalues"] is not None:
                detail += f" eig={_fmt_vec(v['eigenvalues'])}"
            if v["alpha"] is not None:
                detail += f" alpha={v['alpha']:g}"
            print(f"  {v['method']:<15} {detail}", file=out)
        if cert["lyapunov_note"]:
            print(f"  {cert['lyapunov_note']}", file=out)
    ind = report["independence"]
    print(f"gradient rank {ind['rank']} of {ind['k']}: {ind['note']}", file=out)
    if report.get("probe"):
        pr = report["probe"]
        print(
            f"probe: {pr['escapes']}/{pr['sample_count']} escapes (delta={pr['delta']:g}, "
            f"epsilon={pr['epsilon']:g}, T={pr['horizon']:g}), max deviation {pr['max_deviation']:.4g}",
            file=out,
        )
    print(f"status: {report['status']}", file=out)


def analyze(args, out=None) -> int:
    out = out or sys.stdout
    system = get_system(args.system)
    if args.equilibrium not in system.equilibria:
        raise KeyError(f"unknown equilibrium {args.equilibrium!r} (known: {', '.join(system.equilibria)})")
    base = system.problem(args.equilibrium)
    methods = METHOD_FLAGS[args.method]
    certs = [
        run_methods(base.with_pivot(i), methods, args.lambdas).to_dict() for i in _pivots(args.pivot, base.k)
    ]
    if any(c["status"] == "INCONSISTENT" for c in certs):
        status, code = "INCONSISTENT", EXIT_INCONSISTENT
    elif any(c["status"] == "stable" for c in certs):
        status, code = "stable", EXIT_STABLE
    else:
        status, code = "indecisive", EXIT_INDECISIVE
    selected = next((c["problem"]["pivot"] for c in certs if c["status"] == "stable"), None)
    ind = gradient_independence_report(base)
    report = {
        "schema": REPORT_SCHEMA,
        "system": system.name,
        "parameters": system.parameters,
        "equilibrium": args.equilibrium,
        "coordinates": [float(x) for x in system.equilibria[args.equilibrium]],
        "methods": [m.value for m in methods],
        "status": status,
        "selected_pivot": selected,
        "pivots": certs,
        "independence": {"rank": ind.rank, "k": ind.k, "independent": ind.independent, "note": ind.note},
        "probe": None if args.no_probe else _probe(system, args.equilibrium, args),
    }
    if args.json != "-":
        _text_report(report, out)
    _write_json(report, args.json)
    return code


def probe(args, out=None) -> int:
    out = out or sys.stdout
    system = get_system(args.system)
    if args.equilibrium not in system.equilibria:
        raise KeyError(f"unknown equilibrium {args.equilibrium!r}")
    report = _probe(system, args.equilibrium, args)
    if args.json != "-":
        print(
            f"{report['escapes']}/{report['sample_count']} escapes, max deviation {report['max_deviation']:.4g}, "
            f"conservation drift {_fmt_vec(report['max_conservation_drift'])}",
            file=out,
        )
    _write_json({"schema": "equistab.probe/1", "system": system.name, "equilibrium": args.equilibrium, **report},
                args.json)
    return 0


def validate(args, out=None) -> int:
    out = out or sys.stdout
    try:
        system = get_system(args.system)
    except SystemValidationError as exc:
        print(f"INVALID: {exc}", file=out)
        return EXIT_ERROR
    print(validate_conservation(system.vector_field, list(system.constants.values()), list(system.constants))
          .describe(), file=out)
    for name, x in system.equilibria.items():
        r = float(np.linalg.norm(system.vector_field(x)))
        print(f"equilibrium {name} {_fmt_vec(x)}: |f| = {r:.3g}", file=out)
    print("OK", file=out)
    return 0


def list_systems(args, out=None) -> int:
    out = out or sys.stdout
    for name in REGISTRY:
        s = get_system(name)
        print(f"{name}: {s.description}; equilibria: {', '.join(s.equilibria)}", file=out)
    for path in sorted(DATA_DIR.glob("*.json")):
        print(f"bundled file: {path}", file=out)
    return 0


COMMANDS = {"analyze": analyze, "probe": probe, "validate": validate, "list-systems": list_systems}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (KeyError, ValueError, SystemFormatError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
