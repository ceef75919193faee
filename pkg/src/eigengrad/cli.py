"""Command-line entry point: ``eigengrad <subcommand> [config.json] [overrides]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import runner
from .fem import assemble
from .geometry import write_off


def _csv_list(text, conv=str):
    return [conv(x) for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="experiment config (JSON)")
    p.add_argument("--manifold", type=json.loads, help='JSON, e.g. \'{"kind": "flat_torus", "n": 32}\'')
    p.add_argument("--eigen", type=json.loads, help='JSON, e.g. \'{"count": 40, "seed": 1}\'')
    p.add_argument("--checks", type=_csv_list, help=f"comma list from {','.join(runner.CHECKS)}")
    p.add_argument("--kappa", type=float)
    p.add_argument("--output-dir")
    p.add_argument("--probe-vertex", type=int)
    p.add_argument("--lambda-grid", type=lambda s: _csv_list(s, float))
    p.add_argument("--boundary-max", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--export-pencil", action="store_true", default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_config(args) -> runner.ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    for name in ("manifold", "eigen", "checks", "kappa", "output_dir", "probe_vertex", "lambda_grid",
                 "boundary_max", "samples", "export_pencil"):
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if "manifold" not in data:
        raise runner.ConfigError("no manifold given (config file or --manifold)")
    return runner.ExperimentConfig.from_dict(data)


def cmd_mesh(cfg, out):
    mesh = runner.build_mesh(cfg.manifold)
    mesh.validate()
    print(write_off(mesh, out / "mesh.off"))
    return 0


def cmd_solve(cfg, out):
    from .eigensolve import check_spectrum, save_spectrum
    from .geometry import read_off

    mesh = read_off(out / "mesh.off")
    pencil = assemble(mesh)
    spec = runner.solve(pencil, cfg.eigen)
    check_spectrum(spec, pencil)
    for p in save_spectrum(spec, out / "spectrum.json"):
        print(p)
    return 0


def cmd_analyze(cfg, out):
    mesh, pencil, spec = runner.load_stage_inputs(out)
    records = []
    runner.analyze(mesh, pencil, spec, cfg, out, records)
    return _report_records(records, out)


def cmd_probe_boundary(cfg, out):
    rows = runner.boundary_conjecture_probe(cfg)
    runner.write_json(out / "boundary.json", {"rows": rows, "envelopes": runner.boundary_envelopes(rows)})
    for fam, env in runner.boundary_envelopes(rows).items():
        print(f"{fam}: whole {env['whole']}, interior {env['interior']}")
    bad = [r for r in rows if r["ratio_interior"] is not None and r["ratio_interior"] > r["ratio"] * (1 + 1e-12)]
    return 1 if bad else 0


def cmd_report(cfg, out):
    for p in runner.emit_all_plots(runner.load_reports(out), out):
        print(p)
    return 0


def cmd_run(cfg, out):
    manifest = runner.run(cfg)
    return _report_records(manifest.stages, out)


def _report_records(records, out):
    status = 0
    for rec in records:
        line = f"{rec.name:<13} {rec.status:<7} {rec.wall_seconds:8.2f}s"
        if rec.error:
            line += f"  {rec.error}"
        for f in rec.failures:
            line += f"\n    {f}"
        print(line)
        if rec.status != "ok":
            status = 1
    print(f"outputs in {out}")
    return status


COMMANDS = {
    "mesh": (cmd_mesh, "generate the mesh and write OFF"),
    "solve": (cmd_solve, "solve the pencil of a previously written mesh"),
    "analyze": (cmd_analyze, "run spectrum checks on a previous solve"),
    "probe-boundary": (cmd_probe_boundary, "disk boundary probe (analytic and FEM)"),
    "report": (cmd_report, "re-emit SVG plots from written reports"),
    "run": (cmd_run, "all stages with a manifest"),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="eigengrad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        _add_common(sub.add_parser(name, help=help_text))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
    except (runner.ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = cfg.resolve_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command][0](cfg, out)
    except Exception as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
