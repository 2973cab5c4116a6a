"""Command-line interface.

Exit codes: 0 success, 1 configuration error (message names the offending
field), 2 I/O error. Diagnostics go to stderr; results go to files only.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiment as xp
from .errors import ConfigError
from .phenotype import grid_from_json
from .qd import read_archive_json


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxelites",
        description="MAP-Elites over voxel building masses with interchangeable genome encodings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("config", help="YAML config file")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dot-path config patch, repeatable")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--replicates", type=int, default=None, help="override replicate count")
        p.add_argument("--out", default=None, help="override output_dir")
        p.add_argument("--quiet", action="store_true", help="suppress progress reporting")

    add_config_flags(sub.add_parser("run", help="run one experiment (all replicates)"))
    add_config_flags(sub.add_parser("sweep", help="grid-search hyperparameters for one encoding"))

    p = sub.add_parser("aggregate", help="summarize finished runs")
    p.add_argument("manifests", nargs="+", help="manifest.json paths")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--no-figures", action="store_true", help="skip metric-curve figures")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("render-archive", help="draw an archive snapshot as SVG")
    p.add_argument("archive", help="archive JSON path")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--color", choices=("fitness", "encoding"), default="fitness")

    p = sub.add_parser("render-phenotype", help="draw one height grid as SVG")
    p.add_argument("input", help="grid JSON (nested list) or archive JSON")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--bin", default=None, metavar="I,J",
                   help="archive bin to render (default: the fittest elite)")

    p = sub.add_parser("export-phenotypes", help="dump elite phenotypes as CSV")
    p.add_argument("archive", help="archive JSON path")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("validate-config", help="parse and check a config without running")
    p.add_argument("config", help="YAML config file")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def _load_patched_config(args) -> dict:
    data = xp.load_config_file(args.config)
    data = xp.apply_overrides(data, args.override)
    if getattr(args, "seed", None) is not None:
        data["base_seed"] = args.seed
    if getattr(args, "replicates", None) is not None:
        data["replicates"] = args.replicates
    if getattr(args, "out", None) is not None:
        data["output_dir"] = args.out
    return data


def _progress(quiet: bool):
    if quiet:
        return None
    return lambda line: print(line, file=sys.stderr)


def _cmd_run(args) -> int:
    config = xp.parse_experiment_config(_load_patched_config(args))
    manifest = xp.run_experiment(config, progress=_progress(args.quiet))
    if not args.quiet:
        print(f"wrote {len(manifest['files']['metrics'])} replicate(s) to {config.output_dir}",
              file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    spec = xp.parse_sweep_spec(_load_patched_config(args))
    report = xp.run_sweep(spec, progress=_progress(args.quiet))
    if not args.quiet:
        print(f"selected configurations: {report['selected']}", file=sys.stderr)
    return 0


def _cmd_aggregate(args) -> int:
    report = xp.aggregate(args.manifests, args.out, figures=not args.no_figures)
    if not args.quiet:
        print(f"wrote {report['summary_csv']} and {len(report['pvalue_files'])} p-value "
              f"matrix(es) to {args.out}", file=sys.stderr)
    return 0


def _cmd_render_archive(args) -> int:
    from .render import render_archive

    archive, _ = read_archive_json(args.archive)
    render_archive(archive, args.out, color=args.color)
    return 0


def _pick_elite(archive, bin_arg):
    if bin_arg is not None:
        try:
            i, j = (int(part) for part in bin_arg.split(","))
        except ValueError:
            raise ConfigError("expected two comma-separated integers", "bin") from None
        elite = archive.elite_at((i, j))
        if elite is None:
            raise ConfigError(f"bin ({i}, {j}) is empty", "bin")
        return elite
    items = archive.items_sorted()
    if not items:
        raise ConfigError("archive is empty; nothing to render", "archive")
    return max(items, key=lambda kv: (kv[1].fitness, (-kv[0][0], -kv[0][1])))[1]


def _cmd_render_phenotype(args) -> int:
    from .render import render_phenotype

    with open(args.input) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "elites" in data:
        archive, _ = read_archive_json(args.input)
        elite = _pick_elite(archive, args.bin)
        if elite.phenotype is None:
            raise ConfigError("archive lacks encoding configs; cannot decode genomes",
                              "encodings")
        grid = elite.phenotype
    else:
        if args.bin is not None:
            raise ConfigError("--bin applies only to archive inputs", "bin")
        grid = grid_from_json(data)
    render_phenotype(np.asarray(grid), args.out)
    return 0


def _cmd_export(args) -> int:
    xp.export_phenotypes(args.archive, args.out)
    return 0


def _cmd_validate(args) -> int:
    data = xp.load_config_file(args.config)
    data = xp.apply_overrides(data, args.override)
    if "sweep" in data:
        xp.parse_sweep_spec(data)
    else:
        xp.parse_experiment_config(data)
    print(f"{args.config}: ok")
    return 0


_HANDLERS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "aggregate": _cmd_aggregate,
    "render-archive": _cmd_render_archive,
    "render-phenotype": _cmd_render_phenotype,
    "export-phenotypes": _cmd_export,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"parse error in input file: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
