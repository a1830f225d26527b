"""Command-line interface.

Subcommands:
    params        derived geometry/timing/energy report per organization
    calibrate     fit model constants to a reference file, write JSON
    sweep         design-space sweep CSV (area vs latency, all orgs)
    simulate      trace-driven close-page simulation, power and EDP
    gen-trace     synthetic trace generator
    validate-log  independent timing check of a dumped command log

Exit codes: 0 success, 1 usage error, 2 data error, 3 calibration failure.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

from . import backend_name
from .calibration import save_calibration
from .circuit import SolverConfig
from .config import load_orgs, load_reference, load_solver_overrides
from .errors import (
    CalibrationFailure,
    InvalidConfig,
    M3DramError,
    TraceParseError,
)
from .geometry import TechNode
from .pipeline import (
    CalibrationBundle,
    calibrate_all,
    derive_org,
    load_default_bundle,
)
from .simcore import run_simulation
from .traceio import TRACE_KINDS, generate_trace, read_trace, write_trace
from .validator import read_command_log, validate_command_log, write_command_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CALIBRATION = 3

DEFAULT_SIM_ORGS = ["ddr4-512", "m3d-512", "m3d-128"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_bundle(args) -> CalibrationBundle:
    if getattr(args, "calibration", None):
        with open(args.calibration) as fh:
            return CalibrationBundle.from_dict(json.load(fh))
    return load_default_bundle()


def _solver_config(args) -> SolverConfig:
    cfg = SolverConfig()
    if getattr(args, "config", None):
        overrides = load_solver_overrides(args.config)
        if overrides:
            cfg = replace(cfg, **overrides)
    return cfg


def _select_orgs(args, default_names=None) -> dict:
    orgs = load_orgs(getattr(args, "config", None))
    names = list(args.org) if args.org else (default_names or list(orgs))
    missing = [n for n in names if n not in orgs]
    if missing:
        raise InvalidConfig(
            f"unknown organization(s) {', '.join(missing)}; "
            f"known: {', '.join(orgs)}"
        )
    return {n: orgs[n] for n in names}


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _format_params_text(reports) -> str:
    lines = []
    for rep in reports:
        lines.append(f"== {rep['org']} "
                     f"({'M3D' if rep['is_m3d'] else '2D'}, "
                     f"{rep['cells_per_bitline']} cells/bitline) ==")
        groups = (
            ("structure", ["banks", "page_size_bits", "cells_per_bitline"]),
            ("timing (ns)", ["t_rcd_ns", "t_cas_ns", "t_rp_ns", "t_ras_ns",
                             "t_rc_ns", "t_faw_ns", "t_refi_ns", "t_burst_ns",
                             "close_page_latency_ns"]),
            ("energy", ["e_activate_nj", "e_read_nj", "e_write_nj",
                        "e_refresh_nj", "p_background_w"]),
            ("geometry", ["subarray_height_f", "local_bitline_length_f",
                          "global_bitline_length_f", "subarrays_per_bank",
                          "subarray_area_mm2", "bank_area_mm2", "die_area_mm2",
                          "miv_count_per_bank", "miv_area_per_bank_mm2",
                          "cell_density_bits_per_mm2",
                          "local_bitline_resistance_ohm",
                          "local_bitline_capacitance_ff"]),
        )
        for title, keys in groups:
            lines.append(f"  [{title}]")
            for k in keys:
                v = rep[k]
                if isinstance(v, float):
                    lines.append(f"    {k:32s} {v:.6g}")
                else:
                    lines.append(f"    {k:32s} {v}")
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def cmd_params(args) -> int:
    bundle = _load_bundle(args)
    cfg = _solver_config(args)
    orgs = _select_orgs(args)
    tech = TechNode()
    if args.dump_waveform:
        if len(orgs) != 1:
            raise InvalidConfig("--dump-waveform needs exactly one --org")
        cfg = replace(cfg, sample_every=max(1, args.waveform_stride))
    reports = []
    for name, spec in orgs.items():
        model = derive_org(spec, bundle, tech, cfg)
        reports.append(model.report_dict())
        if args.dump_waveform:
            with open(args.dump_waveform, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["time_ns", "v_bitline", "v_cell"])
                for t_s, v_bl, v_cell in model.transient.waveform:
                    writer.writerow([f"{t_s * 1e9:.4f}", f"{v_bl:.6f}",
                                     f"{v_cell:.6f}"])
    if args.format == "json":
        _emit(json.dumps(reports, indent=2) + "\n", args.output)
    elif args.format == "csv":
        _emit(_rows_to_csv(reports), args.output)
    else:
        _emit(_format_params_text(reports), args.output)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    rows = load_reference(args.reference)
    cfg = _solver_config(args)
    bundle, report = calibrate_all(rows, solver_cfg=cfg,
                                   exclude=tuple(args.exclude))
    payload = bundle.to_dict()
    payload["report"] = report
    payload["backend"] = backend_name()
    if args.output:
        save_calibration(args.output, payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    worst = bundle.circuit.worst_residual()
    print(f"calibration ok; worst circuit residual {worst[2]:+.2%} "
          f"({worst[0]}/{worst[1]}), tCAS fit {bundle.tcas.kind}, "
          f"max tCAS residual {bundle.tcas.max_residual_ns():.3f} ns",
          file=sys.stderr)
    for org, held in report["held_out"].items():
        print(f"held out {org}: predicted tRCD {held['t_rcd_ns']:.3f} ns",
              file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    bundle = _load_bundle(args)
    cfg = _solver_config(args)
    orgs = _select_orgs(args)
    tech = TechNode()
    models = [derive_org(spec, bundle, tech, cfg) for spec in orgs.values()]
    base = next((m for m in models if m.spec.name == args.normalize), None)
    if base is None:
        raise InvalidConfig(
            f"normalization org {args.normalize!r} not in the sweep set"
        )
    rows = []
    for m in models:
        rows.append({
            "org": m.spec.name,
            "cells_per_bitline": m.spec.cells_per_bitline,
            "is_m3d": int(m.spec.is_m3d),
            "die_area_norm": m.geometry.die_area_mm2 / base.geometry.die_area_mm2,
            "t_rcd_ns": m.timing.t_rcd_ns,
            "close_page_latency_ns": m.timing.close_page_latency_ns,
        })
    _emit(_rows_to_csv(rows), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args)
    cfg = _solver_config(args)
    orgs = _select_orgs(args, default_names=DEFAULT_SIM_ORGS)
    tech = TechNode()

    rows = []
    for name, spec in orgs.items():
        if args.trace:
            trace = read_trace(args.trace)
        else:
            trace = generate_trace(args.gen, args.n, args.seed, spec,
                                   mean_gap_cycles=args.mean_gap)
        model = derive_org(spec, bundle, tech, cfg)
        result = run_simulation(trace, spec, model.timing, model.energy,
                                horizon_ns=args.horizon_ns,
                                collect_log=bool(args.dump_commands))
        if args.dump_commands:
            write_command_log(f"{args.dump_commands}.{name}.csv",
                              result.command_log)
        row = {"org": name, **result.stats.as_dict()}
        row.update(result.power.as_dict())
        row["edp_pj_ns_per_bit"] = result.edp_pj_ns_per_bit
        rows.append(row)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.output)
    else:
        _emit(_rows_to_csv(rows), args.output)
    return EXIT_OK


def cmd_gen_trace(args) -> int:
    orgs = _select_orgs(args, default_names=["ddr4-512"])
    spec = next(iter(orgs.values()))
    records = generate_trace(args.kind, args.n, args.seed, spec,
                             mean_gap_cycles=args.mean_gap)
    write_trace(args.output, records)
    print(f"wrote {len(records)} records to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_validate_log(args) -> int:
    bundle = _load_bundle(args)
    cfg = _solver_config(args)
    orgs = _select_orgs(args)
    if len(orgs) != 1:
        raise InvalidConfig("validate-log needs exactly one --org")
    spec = next(iter(orgs.values()))
    model = derive_org(spec, bundle, TechNode(), cfg)
    log = read_command_log(args.log)
    problems = validate_command_log(log, model.timing, banks=spec.banks)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        print(f"{len(problems)} violation(s) in {args.log}", file=sys.stderr)
        return EXIT_DATA
    print(f"{args.log}: {len(log)} commands, no timing violations")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="m3dram",
                     description="DRAM design-space modeling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="organization/solver config file")
        p.add_argument("--calibration", help="calibration JSON (default: bundled)")
        p.add_argument("--org", action="append", default=[],
                       help="organization name (repeatable)")
        p.add_argument("-o", "--output", help="output file (default: stdout)")

    p = sub.add_parser("params", help="derived parameter report")
    common(p)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--dump-waveform", help="CSV of the activation transient")
    p.add_argument("--waveform-stride", type=int, default=5,
                   help="sample every N solver steps")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("calibrate", help="fit constants to a reference file")
    p.add_argument("--config", help="organization/solver config file")
    p.add_argument("--reference", help="reference measurements (default: bundled)")
    p.add_argument("--exclude", action="append", default=[],
                   help="hold an organization out of all fits (repeatable)")
    p.add_argument("-o", "--output", help="write calibration JSON here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", help="area/latency design-space sweep CSV")
    common(p)
    p.add_argument("--normalize", default="ddr4-512",
                   help="organization whose die area maps to 1.0")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="trace-driven close-page simulation")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", help="trace file (.gz ok)")
    src.add_argument("--gen", choices=TRACE_KINDS, help="generate a trace")
    p.add_argument("--n", type=int, default=100_000, help="generated length")
    p.add_argument("--seed", type=int, default=1, help="generator seed")
    p.add_argument("--mean-gap", type=float, default=10.0,
                   help="mean request gap in cycles")
    p.add_argument("--horizon-ns", type=float, default=0.0,
                   help="minimum accounted wall time")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--dump-commands", metavar="PREFIX",
                   help="write PREFIX.<org>.csv command logs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-trace", help="write a synthetic trace")
    p.add_argument("--config", help="organization config file")
    p.add_argument("--org", action="append", default=[],
                   help="organization defining the address space")
    p.add_argument("--kind", choices=TRACE_KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--mean-gap", type=float, default=10.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("validate-log", help="check a dumped command log")
    common(p)
    p.add_argument("--log", required=True, help="command log CSV")
    p.set_defaults(func=cmd_validate_log)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except CalibrationFailure as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (TraceParseError, InvalidConfig, FileNotFoundError,
            M3DramError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
