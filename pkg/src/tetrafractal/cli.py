"""Command-line front end: ``tetrafractal <subcommand> [options]``."""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import (assembly_dynamics, config, configs, dynamics, faults, geometry, inertia,
               sim, truss, verify)
from .errors import ResourceLimitError, TetraError

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_FAILED = 3
EXIT_USAGE = 64
DEFAULT_SEED = 20240101


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return obj


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def emit_report(report, schema, out):
    report = jsonable(report)
    config.validate(report, schema)
    emit(dump_json(report), out)


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def load_params(path):
    """Defaults merged with an optional parameter file."""
    cfg = config.defaults()
    if path:
        data = config.read_json(path, "params")
        for section, values in data.items():
            cfg[section].update(values)
    return cfg


def parse_range(text):
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise TetraError(f"range must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise TetraError(f"bad range {text!r}")
    return np.round(np.arange(start, stop + step / 2, step), 12)


# ------------------------------------------------------------ subcommands

def cmd_geometry(args, cfg):
    edge = args.edge or cfg["geometry"]["submodule_edge"]
    geom = geometry.make_tetrahedron(edge)
    dims = geometry.derive_dimensions(edge)
    if args.n > cfg["geometry"]["max_depth"]:
        raise ResourceLimitError(f"depth {args.n} exceeds the configured maximum "
                                 f"{cfg['geometry']['max_depth']}")
    depths = []
    for n in range(args.min_depth, args.n + 1):
        asm = geometry.generate_assembly(geom, n, args.module, cfg["geometry"]["max_depth"])
        depths.append(geometry.rotor_disk_report(asm))
    emit_report({"edge": edge, "module": args.module,
                 "dimensions": {k: getattr(dims, k) for k in ("a", "x", "d", "h", "R", "r", "phi")},
                 "depths": depths}, "geometry", args.out)
    return EXIT_OK


def cmd_inertia(args, cfg):
    p = dynamics.TetracopterParams.from_dict(cfg["tetracopter"])
    body = inertia.RigidBodyParams(p.m, p.I_q)
    r = geometry.circumradius(p.a)
    rows = []
    stepped = body
    for n in range(args.n + 1):
        closed = inertia.assembly_inertia(body, r, n)
        rows.append({"n": n, "mass": closed.mass, "inertia": closed.inertia,
                     "recursion_rel_error": float(np.abs(closed.inertia - stepped.inertia).max()
                                                  / np.abs(stepped.inertia).max())})
        stepped = inertia.compose_step(stepped, n, r)
    emit_report({"r": r, "module": {"mass": body.mass, "inertia": body.inertia}, "depths": rows},
                "inertia", args.out)
    return EXIT_OK


def cmd_assembly_maps(args, cfg):
    p = dynamics.TetracopterParams.from_dict(cfg["tetracopter"])
    geom = geometry.make_tetrahedron(p.a)
    M0 = assembly_dynamics.elementary_maps(dynamics.linearize(p), p)
    maps = [M0]
    for _ in range(max(args.n, 2)):
        maps.append(assembly_dynamics.recurse_maps(maps[-1], geom))
    body = inertia.RigidBodyParams(p.m, p.I_q)
    J = [np.abs(inertia.assembly_inertia(body, geom.circumradius, m.n).inertia).sum(axis=1).max()
         for m in maps]
    target = maps[args.n]
    closed = assembly_dynamics.closed_form_maps(M0, geom, args.n)
    gap = max(float(np.abs(a - b).max()) for a, b in
              ((target.Ma, closed.Ma), (target.Mb, closed.Mb), (target.Mc, closed.Mc)))
    report = {"n": args.n, "growth": assembly_dynamics.growth_report(maps, J),
              "closed_form_max_abs_gap": gap}
    if args.matrices:
        report["maps"] = target.to_dict()
    emit_report(report, "assembly-maps", args.out)
    return EXIT_OK


def cmd_linearize(args, cfg):
    p = dynamics.TetracopterParams.from_dict(cfg["tetracopter"])
    model = dynamics.linearize(p)
    emit_report({"params": p.to_dict(), "model": model.to_dict()}, "linearize", args.out)
    return EXIT_OK


def cmd_truss(args, cfg):
    tcfg = cfg["truss"]
    geom = geometry.make_tetrahedron(cfg["tetracopter"]["frame_edge"])
    t, sol, summary = truss.scenario(args.scenario, args.n, args.payload, geom, tcfg)
    report = {"summary": summary}
    if args.sweep:
        report["sweep"] = truss.payload_sweep(args.scenario, args.n, parse_range(args.sweep), geom, tcfg)
        for row in report["sweep"]:
            row.pop("section", None)
        if args.sweep_out:
            cols = ["payload_kg", "max_tension_N", "max_compression_N", "max_displacement_m",
                    "min_buckling_margin_N"]
            emit(rows_to_csv(report["sweep"], cols), args.sweep_out)
    table = truss.member_table(t, sol, tcfg["length_factor"])
    if args.out:
        cols = ["member_id", "node_i", "node_j", "length_m", "axial_N", "P_cr_N", "margin_N"]
        emit(rows_to_csv(table, cols), args.out)
    emit_report(report, "truss", args.json)
    return EXIT_OK


def cmd_faults(args, cfg):
    fcfg = cfg["faults"]
    if args.bounds != "auto":
        try:
            fcfg["upper_bound"] = float(args.bounds)
        except ValueError:
            raise TetraError(f"--bounds must be 'auto' or a number, got {args.bounds!r}") from None
    report = faults.fault_report(fcfg, mass=args.mass, max_card=args.max_card, sweep=not args.no_sweep)
    emit_report(report, "faults", args.out)
    return EXIT_OK


def cmd_configs(args, cfg):
    emit_report(configs.configs_report(seed=args.seed), "configs", args.out)
    return EXIT_OK


def cmd_sim(args, cfg):
    p = dynamics.TetracopterParams.from_dict(cfg["tetracopter"])
    scfg = cfg["sim"]
    gains = dict(scfg["gains"])
    if args.gains:
        gains.update(config.read_json(args.gains, "gains"))
    gains = sim.PidGains(**gains)
    run = sim.hover_trial(sim.parse_perturbation(args.perturb), gains,
                          duration=args.t or scfg["duration"], dt=args.dt or scfg["dt"], params=p,
                          threshold=scfg["settle_threshold"])
    if args.out:
        emit(run.to_csv(), args.out)
    emit_report({"summary": run.summary(), "gains": gains.to_dict()}, "sim", args.json)
    return EXIT_OK


def cmd_verify_all(args, cfg):
    numbers = [int(v) for v in args.only.split(",")] if args.only else None
    results = verify.run_all(numbers)
    for r in results:
        print(r.line())
    if args.out:
        emit_report({"results": [r.to_dict() for r in results],
                     "passed": all(r.passed for r in results)}, "verify", args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def build_parser():
    parser = Parser(prog="tetrafractal", description="Fractal tetrahedron assembly analyses.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--params", help="JSON file overriding the shipped defaults")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.set_defaults(func=func)
        return p

    p = add("geometry", cmd_geometry, "rotor-disk coverage and tetrahedron dimensions")
    p.add_argument("--n", type=int, default=6, help="largest depth")
    p.add_argument("--min-depth", type=int, default=1)
    p.add_argument("--edge", type=float)
    p.add_argument("--module", choices=["submodule", "tetracopter"], default="submodule")
    p.add_argument("--out")

    p = add("inertia", cmd_inertia, "mass and inertia of the n-assembly")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--out")

    p = add("assembly-maps", cmd_assembly_maps, "linear maps of the n-assembly and their growth")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--matrices", action="store_true", help="include the depth-n matrices")
    p.add_argument("--out")

    p = add("linearize", cmd_linearize, "hover linearisation of the Tetracopter")
    p.add_argument("--out")

    p = add("truss", cmd_truss, "truss member forces and buckling margins")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--scenario", choices=list(truss.KINDS), default="top")
    p.add_argument("--payload", type=float, default=30.0)
    p.add_argument("--sweep", help="payload range start:stop:step [kg]")
    p.add_argument("--sweep-out", help="CSV of the sweep curves")
    p.add_argument("--out", help="CSV of member forces")
    p.add_argument("--json", help="summary JSON path (default stdout)")

    p = add("faults", cmd_faults, "minimum rotor failures that prevent hover")
    p.add_argument("--mass", type=float)
    p.add_argument("--bounds", default="auto", help="'auto' or the squared-speed upper bound")
    p.add_argument("--max-card", type=int)
    p.add_argument("--no-sweep", action="store_true", help="skip the bound-sensitivity sweep")
    p.add_argument("--out")

    p = add("configs", cmd_configs, "propeller configurations of the single tetrahedron")
    p.add_argument("--out")

    p = add("sim", cmd_sim, "closed-loop hover simulation")
    p.add_argument("--perturb", default="", help='initial offset, e.g. "p=0.5,theta=0.1"')
    p.add_argument("--gains", help="JSON file of PID gains")
    p.add_argument("--dt", type=float)
    p.add_argument("--t", type=float, help="duration [s]")
    p.add_argument("--out", help="trajectory CSV")
    p.add_argument("--json", help="summary JSON path (default stdout)")

    p = add("verify-all", cmd_verify_all, "run the acceptance checks")
    p.add_argument("--only", help="comma-separated check numbers")
    p.add_argument("--out", help="JSON report path")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        np.random.seed(args.seed)
        cfg = load_params(args.params)
        return args.func(args, cfg)
    except (TetraError, ValueError) as exc:
        sys.stderr.write(f"tetrafractal: error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
