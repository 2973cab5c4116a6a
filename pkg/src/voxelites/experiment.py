"""Experiment harness: config files, replicated runs, sweeps and aggregation.

A YAML config describes one experiment (encodings, loop settings, archive
resolution, replicates). ``run_experiment`` executes the replicates with seeds
``base_seed + replicate`` and writes one metrics CSV and one final-archive
JSON per replicate plus a manifest. ``run_sweep`` grids over hyperparameter
values for one encoding and ranks the configurations by Pareto dominance on
(mean fitness, phenotypic diversity). ``aggregate`` joins finished runs into a
summary table, pairwise significance matrices and metric-curve figures.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import yaml

from .encodings import ENCODINGS, Encoding, build_encoding
from .errors import ConfigError
from .metrics import (
    RunMetrics,
    read_metrics_csv,
    pareto_fronts,
    select_pareto,
    write_metrics_csv,
    write_significance_matrix,
)
from .phenotype import GRID_COLS, GRID_ROWS, fitness as grid_fitness
from .qd import LoopConfig, run_map_elites, write_archive_json

SUMMARY_METRICS = ("mean_fitness", "coverage", "qd_score", "phenotypic_diversity")


@dataclass(frozen=True)
class ExperimentConfig:
    encodings: tuple[Encoding, ...]
    loop_init_population: int
    loop_children: int
    loop_max_generations: int
    area_edges: tuple[float, ...]
    count_edges: tuple[float, ...]
    replicates: int
    base_seed: int
    snapshot_cadence: int
    output_dir: str
    workers: int
    inflow_axis: int
    rows: int
    cols: int
    resolved: dict = field(compare=False)

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + r for r in range(self.replicates)]

    def loop_for_seed(self, seed: int) -> LoopConfig:
        return LoopConfig(
            init_population=self.loop_init_population,
            children_per_generation=self.loop_children,
            max_generations=self.loop_max_generations,
            rng_seed=seed,
            snapshot_every=self.snapshot_cadence,
        )


@dataclass(frozen=True)
class SweepSpec:
    encoding_kind: str
    grid: tuple[tuple[str, tuple[Any, ...]], ...]  # (param, values) in file order
    fixed: tuple[tuple[str, Any], ...]  # non-swept encoding params
    loop_init_population: int
    loop_children: int
    loop_max_generations: int
    area_edges: tuple[float, ...]
    count_edges: tuple[float, ...]
    replicates: int
    base_seed: int
    snapshot_cadence: int
    output_dir: str
    workers: int
    inflow_axis: int
    rows: int
    cols: int
    select_count: int
    resolved: dict = field(compare=False)

    def points(self) -> list[dict]:
        """Cartesian product of the grid axes, row-major in file order."""
        names = [name for name, _ in self.grid]
        combos = itertools.product(*[values for _, values in self.grid])
        return [dict(zip(names, combo)) for combo in combos]


# ---------------------------------------------------------------------------
# config parsing


def load_config_file(path) -> dict:
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


_OVERRIDE_SEGMENT = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)((?:\[\d+\])*)$")


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    """Apply ``key.path=value`` patches; values are parsed as YAML scalars.

    Path segments may carry list indices, e.g. ``encodings[0].p_mut=0.1``.
    """
    patched = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        raw_path, raw_value = item.split("=", 1)
        try:
            value = yaml.safe_load(raw_value) if raw_value != "" else ""
        except yaml.YAMLError:
            value = raw_value
        node: Any = patched
        segments = raw_path.split(".")
        steps: list[tuple[Any, Any]] = []  # (container, key-or-index)
        for segment in segments:
            match = _OVERRIDE_SEGMENT.match(segment)
            if match is None:
                raise ConfigError(f"bad override path segment {segment!r}", raw_path)
            name, index_part = match.group(1), match.group(2)
            steps.append((node, name))
            if not isinstance(node, dict):
                raise ConfigError("path walks into a non-mapping", raw_path)
            node = node.get(name)
            for index_token in re.findall(r"\[(\d+)\]", index_part):
                idx = int(index_token)
                if not isinstance(node, list) or idx >= len(node):
                    raise ConfigError(f"index [{idx}] out of range", raw_path)
                steps.append((node, idx))
                node = node[idx]
        container, last = steps[-1]
        container[last] = value
    return patched


def _expect_mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError("must be a mapping", path)
    return value


def _take_int(section: dict, key: str, path: str, default: int | None, minimum: int) -> int:
    if key not in section:
        if default is None:
            raise ConfigError("required field is missing", f"{path}.{key}" if path else key)
        return default
    value = section.pop(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError("must be an integer", f"{path}.{key}" if path else key)
    if value < minimum:
        raise ConfigError(f"must be >= {minimum}", f"{path}.{key}" if path else key)
    return value


def _reject_unknown(section: dict, path: str) -> None:
    if section:
        key = sorted(section)[0]
        raise ConfigError("unknown key", f"{path}.{key}" if path else key)


def _parse_edges(section: dict, axis: str, default_hi: float, path: str) -> list[float]:
    bins_key, edges_key = f"{axis}_bins", f"{axis}_edges"
    if edges_key in section and bins_key in section:
        raise ConfigError(f"give either {bins_key} or {edges_key}, not both", f"{path}.{edges_key}")
    if edges_key in section:
        edges = section.pop(edges_key)
        if not isinstance(edges, list) or len(edges) < 2:
            raise ConfigError("must be a list of at least 2 numbers", f"{path}.{edges_key}")
        try:
            out = [float(v) for v in edges]
        except (TypeError, ValueError):
            raise ConfigError("edges must be numeric", f"{path}.{edges_key}") from None
        if any(b <= a for a, b in zip(out, out[1:])):
            raise ConfigError("edges must be strictly increasing", f"{path}.{edges_key}")
        return out
    n_bins = _take_int(section, bins_key, path, 16, 1)
    if axis == "area":
        return [default_hi * i / n_bins for i in range(n_bins + 1)]
    return [float(i) for i in range(n_bins + 1)]


def _parse_common(data: dict, *, require_output: bool) -> dict:
    """Fields shared by run configs and sweep configs."""
    out: dict[str, Any] = {}
    grid_section = _expect_mapping(data.pop("grid", None), "grid")
    out["rows"] = _take_int(grid_section, "rows", "grid", GRID_ROWS, 1)
    out["cols"] = _take_int(grid_section, "cols", "grid", GRID_COLS, 1)
    _reject_unknown(grid_section, "grid")

    loop_section = _expect_mapping(data.pop("loop", None), "loop")
    out["loop_init_population"] = _take_int(loop_section, "init_population", "loop", 100, 1)
    out["loop_children"] = _take_int(loop_section, "children_per_generation", "loop", 10, 1)
    out["loop_max_generations"] = _take_int(loop_section, "max_generations", "loop", 50_000, 0)
    _reject_unknown(loop_section, "loop")

    archive_section = _expect_mapping(data.pop("archive", None), "archive")
    n_cells = float(out["rows"] * out["cols"])
    out["area_edges"] = _parse_edges(archive_section, "area", n_cells, "archive")
    out["count_edges"] = _parse_edges(archive_section, "count", 16.0, "archive")
    _reject_unknown(archive_section, "archive")

    fitness_section = _expect_mapping(data.pop("fitness", None), "fitness")
    inflow = _take_int(fitness_section, "inflow_axis", "fitness", 0, 0)
    if inflow not in (0, 1):
        raise ConfigError("must be 0 or 1", "fitness.inflow_axis")
    out["inflow_axis"] = inflow
    _reject_unknown(fitness_section, "fitness")

    out["replicates"] = _take_int(data, "replicates", "", 1, 1)
    out["base_seed"] = _take_int(data, "base_seed", "", 0, 0)
    out["snapshot_cadence"] = _take_int(data, "snapshot_cadence", "", 100, 1)
    out["workers"] = _take_int(data, "workers", "", 1, 1)

    if "output_dir" in data:
        output_dir = data.pop("output_dir")
        if not isinstance(output_dir, str) or not output_dir:
            raise ConfigError("must be a non-empty string", "output_dir")
        out["output_dir"] = output_dir
    elif require_output:
        raise ConfigError("required field is missing", "output_dir")
    else:
        out["output_dir"] = ""
    return out


def _build_encodings(entries, rows: int, cols: int) -> tuple[Encoding, ...]:
    if not isinstance(entries, list) or not entries:
        raise ConfigError("must be a non-empty list", "encodings")
    built = []
    seen = set()
    for i, entry in enumerate(entries):
        try:
            enc = build_encoding(entry, rows=rows, cols=cols)
        except ConfigError as exc:
            raise exc.at(f"encodings[{i}]") from None
        if enc.kind in seen:
            raise ConfigError(f"duplicate encoding kind {enc.kind!r}", f"encodings[{i}].kind")
        seen.add(enc.kind)
        built.append(enc)
    return tuple(built)


def parse_experiment_config(data: dict) -> ExperimentConfig:
    """Validate a run config; raises ConfigError naming the offending field."""
    work = copy.deepcopy(data)
    common = _parse_common(work, require_output=True)
    encodings = _build_encodings(work.pop("encodings", None), common["rows"], common["cols"])
    _reject_unknown(work, "")
    resolved = _resolve_dict(common, encodings=[enc.to_config() for enc in encodings])
    return ExperimentConfig(encodings=encodings, resolved=resolved, **common)


def parse_sweep_spec(data: dict) -> SweepSpec:
    """Validate a sweep config (a run config whose ``sweep`` section replaces
    ``encodings``)."""
    work = copy.deepcopy(data)
    sweep_section = work.pop("sweep", None)
    if sweep_section is None:
        raise ConfigError("required section is missing", "sweep")
    sweep_section = _expect_mapping(sweep_section, "sweep")
    common = _parse_common(work, require_output=True)
    _reject_unknown(work, "")

    kind = sweep_section.pop("encoding", None)
    if kind not in ENCODINGS:
        raise ConfigError(f"unknown encoding {kind!r}", "sweep.encoding")
    grid_map = _expect_mapping(sweep_section.pop("grid", None), "sweep.grid")
    if not grid_map:
        raise ConfigError("must list at least one hyperparameter axis", "sweep.grid")
    grid: list[tuple[str, tuple[Any, ...]]] = []
    for param, values in grid_map.items():
        if not isinstance(values, list) or not values:
            raise ConfigError("axis must be a non-empty list", f"sweep.grid.{param}")
        grid.append((str(param), tuple(values)))
    fixed_map = _expect_mapping(sweep_section.pop("fixed", None), "sweep.fixed")
    select_count = _take_int(sweep_section, "select", "sweep", 4, 1)
    _reject_unknown(sweep_section, "sweep")

    spec = SweepSpec(
        encoding_kind=kind,
        grid=tuple(grid),
        fixed=tuple(sorted(fixed_map.items())),
        select_count=select_count,
        resolved={},
        **common,
    )
    # validate every grid point eagerly so bad values fail before any run
    for i, point in enumerate(spec.points()):
        try:
            build_encoding(
                {"kind": kind, **dict(spec.fixed), **point}, rows=spec.rows, cols=spec.cols
            )
        except ConfigError as exc:
            raise exc.at(f"sweep.grid[point {i}]") from None
    resolved = _resolve_dict(
        common,
        sweep={
            "encoding": kind,
            "grid": {name: list(values) for name, values in grid},
            "fixed": dict(spec.fixed),
            "select": select_count,
        },
    )
    object.__setattr__(spec, "resolved", resolved)
    return spec


def _resolve_dict(common: dict, **extra) -> dict:
    resolved = {
        "grid": {"rows": common["rows"], "cols": common["cols"]},
        "loop": {
            "init_population": common["loop_init_population"],
            "children_per_generation": common["loop_children"],
            "max_generations": common["loop_max_generations"],
        },
        "archive": {
            "area_edges": list(common["area_edges"]),
            "count_edges": list(common["count_edges"]),
        },
        "fitness": {"inflow_axis": common["inflow_axis"]},
        "replicates": common["replicates"],
        "base_seed": common["base_seed"],
        "snapshot_cadence": common["snapshot_cadence"],
        "workers": common["workers"],
        "output_dir": common["output_dir"],
    }
    resolved.update(extra)
    return resolved


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# running


def _replicate_job(config: ExperimentConfig, replicate: int) -> tuple[str, str]:
    """Run one replicate and write its two output files."""
    seed = config.base_seed + replicate
    inflow = config.inflow_axis
    archive, stream = run_map_elites(
        config.encodings,
        config.loop_for_seed(seed),
        area_edges=config.area_edges,
        count_edges=config.count_edges,
        fitness_fn=lambda grid: grid_fitness(grid, inflow),
    )
    metrics_name = f"metrics_r{replicate:03d}.csv"
    archive_name = f"archive_r{replicate:03d}.json"
    out = Path(config.output_dir)
    write_metrics_csv(out / metrics_name, stream)
    write_archive_json(out / archive_name, archive, config.encodings)
    return metrics_name, archive_name


def run_experiment(
    config: ExperimentConfig, progress: Callable[[str], None] | None = None
) -> dict:
    """Execute all replicates and return the manifest (also written to disk)."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: list[tuple[str, str]] = []
    if config.workers > 1 and config.replicates > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, config.replicates)) as pool:
            futures = [pool.submit(_replicate_job, config, r) for r in range(config.replicates)]
            for r, future in enumerate(futures):
                results.append(future.result())
                if progress is not None:
                    progress(f"replicate {r} done (seed {config.base_seed + r})")
    else:
        for r in range(config.replicates):
            results.append(_replicate_job(config, r))
            if progress is not None:
                progress(f"replicate {r} done (seed {config.base_seed + r})")
    manifest = {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config_hash": config_hash(config.resolved),
        "config": config.resolved,
        "seeds": config.seeds,
        "files": {
            "metrics": [m for m, _ in results],
            "archives": [a for _, a in results],
        },
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return manifest


def load_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def run_sweep(spec: SweepSpec, progress: Callable[[str], None] | None = None) -> dict:
    """Run every grid point, rank configurations, and write the sweep report."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = spec.points()
    rows = []
    objectives: list[tuple[float, float]] = []
    for i, point in enumerate(points):
        enc_config = {"kind": spec.encoding_kind, **dict(spec.fixed), **point}
        sub = ExperimentConfig(
            encodings=(build_encoding(enc_config, rows=spec.rows, cols=spec.cols),),
            loop_init_population=spec.loop_init_population,
            loop_children=spec.loop_children,
            loop_max_generations=spec.loop_max_generations,
            area_edges=spec.area_edges,
            count_edges=spec.count_edges,
            replicates=spec.replicates,
            base_seed=spec.base_seed,
            snapshot_cadence=spec.snapshot_cadence,
            output_dir=str(out / f"point_{i:03d}"),
            workers=spec.workers,
            inflow_axis=spec.inflow_axis,
            rows=spec.rows,
            cols=spec.cols,
            resolved=_resolve_dict(
                {
                    "rows": spec.rows,
                    "cols": spec.cols,
                    "loop_init_population": spec.loop_init_population,
                    "loop_children": spec.loop_children,
                    "loop_max_generations": spec.loop_max_generations,
                    "area_edges": spec.area_edges,
                    "count_edges": spec.count_edges,
                    "inflow_axis": spec.inflow_axis,
                    "replicates": spec.replicates,
                    "base_seed": spec.base_seed,
                    "snapshot_cadence": spec.snapshot_cadence,
                    "workers": spec.workers,
                    "output_dir": str(out / f"point_{i:03d}"),
                },
                encodings=[enc_config],
            ),
        )
        manifest = run_experiment(sub)
        finals = [
            read_metrics_csv(Path(sub.output_dir) / name)[-1] for name in manifest["files"]["metrics"]
        ]
        fit = float(np.mean([m.mean_fitness for m in finals]))
        div = float(np.mean([m.phenotypic_diversity for m in finals]))
        objectives.append((fit, div))
        rows.append({"point": point, "mean_fitness": fit, "phenotypic_diversity": div})
        if progress is not None:
            progress(f"point {i} done: fitness {fit:.4f}, diversity {div:.4g}")

    fronts = pareto_fronts(objectives)
    rank_of = {}
    for rank, front in enumerate(fronts, start=1):
        for idx in front:
            rank_of[idx] = rank
    selected = set(select_pareto(objectives, count=spec.select_count))

    param_names = [name for name, _ in spec.grid]
    report_path = out / "sweep_report.csv"
    with open(report_path, "w", newline="") as fh:
        header = ["config_index", *param_names, "mean_fitness", "phenotypic_diversity", "front", "selected"]
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(rows):
            cells = [str(i)]
            cells += [repr(row["point"][name]) for name in param_names]
            cells += [repr(row["mean_fitness"]), repr(row["phenotypic_diversity"])]
            cells += [str(rank_of[i]), "1" if i in selected else "0"]
            fh.write(",".join(cells) + "\n")

    report = {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config_hash": config_hash(spec.resolved),
        "config": spec.resolved,
        "points": [row["point"] for row in rows],
        "objectives": [[f, d] for f, d in objectives],
        "fronts": fronts,
        "selected": sorted(selected),
        "report_csv": report_path.name,
    }
    with open(out / "sweep_manifest.json", "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return report


# ---------------------------------------------------------------------------
# aggregation


def _final_rows(manifest_path: Path) -> tuple[str, list[RunMetrics], list[list[RunMetrics]]]:
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    streams = []
    for name in manifest["files"]["metrics"]:
        path = base / name
        if not path.exists():
            raise FileNotFoundError(f"metrics file missing: {path}")
        streams.append(read_metrics_csv(path))
    label = base.name or "run"
    return label, [s[-1] for s in streams], streams


def aggregate(manifest_paths: Sequence[str], output_dir, *, figures: bool = True) -> dict:
    """Summarize finished runs: summary CSV, p-value matrices, metric curves."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels: list[str] = []
    finals: list[list[RunMetrics]] = []
    streams_per_run: list[list[list[RunMetrics]]] = []
    for path in manifest_paths:
        label, final_rows, streams = _final_rows(Path(path))
        if label in labels:
            label = f"{label}_{len(labels)}"
        labels.append(label)
        finals.append(final_rows)
        streams_per_run.append(streams)

    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        cols = ["run", "replicates"]
        for metric in SUMMARY_METRICS:
            cols += [f"{metric}_mean", f"{metric}_std"]
        fh.write(",".join(cols) + "\n")
        for label, rows in zip(labels, finals):
            cells = [label, str(len(rows))]
            for metric in SUMMARY_METRICS:
                values = np.array([getattr(m, metric) for m in rows], dtype=np.float64)
                mean = float(values.mean())
                std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
                cells += [repr(mean), repr(std)]
            fh.write(",".join(cells) + "\n")

    pvalue_files = []
    if len(labels) >= 2 and all(len(rows) >= 2 for rows in finals):
        for metric in SUMMARY_METRICS:
            samples = [[getattr(m, metric) for m in rows] for rows in finals]
            name = f"pvalues_{metric}.csv"
            write_significance_matrix(out / name, labels, samples)
            pvalue_files.append(name)

    figure_files = []
    if figures:
        from .render import metric_curves

        for metric in SUMMARY_METRICS:
            curves = []
            for label, streams in zip(labels, streams_per_run):
                gens = [m.generation for m in streams[0]]
                values = np.mean(
                    [[getattr(m, metric) for m in stream] for stream in streams], axis=0
                )
                curves.append((label, gens, values))
            name = f"curve_{metric}.svg"
            metric_curves(curves, metric, out / name)
            figure_files.append(name)

    report = {
        "summary_csv": summary_path.name,
        "pvalue_files": pvalue_files,
        "figure_files": figure_files,
        "runs": labels,
    }
    return report


# ---------------------------------------------------------------------------
# phenotype export


def export_phenotypes(archive_path, csv_path) -> int:
    """Dump every elite's flat phenotype with tag and fitness; returns the row count."""
    from .qd import read_archive_json

    archive, encoding_configs = read_archive_json(archive_path)
    if not encoding_configs:
        raise ConfigError(
            "archive file lacks encoding configs; phenotypes cannot be decoded",
            "encodings",
        )
    items = archive.items_sorted()
    n_cells = None
    with open(csv_path, "w", newline="") as fh:
        for _, elite in items:
            if elite.phenotype is None:
                raise ConfigError(
                    f"no encoding config for tag {elite.encoding_tag!r}", "encodings"
                )
            flat = elite.phenotype.ravel()
            if n_cells is None:
                n_cells = flat.size
                header = ["encoding_tag", "fitness"] + [f"cell_{i:03d}" for i in range(n_cells)]
                fh.write(",".join(header) + "\n")
            cells = [elite.encoding_tag, repr(elite.fitness)] + [str(int(v)) for v in flat]
            fh.write(",".join(cells) + "\n")
        if n_cells is None:
            header = ["encoding_tag", "fitness"]
            fh.write(",".join(header) + "\n")
    return len(items)
