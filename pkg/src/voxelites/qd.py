"""MAP-Elites archive and evolutionary loop.

The archive is a 2D grid binned by (built area, building count). A candidate
enters a bin only if the bin is empty or the candidate is strictly fitter;
ties keep the incumbent. The loop draws parents uniformly from the bins
filled at the start of each generation, mutates each with the operator of the
encoding that produced it, and inserts children in index order. With several
encodings active the initial population is split equally among them and the
encodings then compete in the shared archive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .encodings import ENCODING_ORDER, Encoding, genome_from_json, genome_to_json
from .errors import ConfigError
from .metrics import RunMetrics, coverage, mean_fitness, phenotypic_diversity, qd_score
from .phenotype import N_CELLS, Features, features as grid_features, fitness as grid_fitness

FitnessFn = Callable[[np.ndarray], float]


def default_area_edges(n_bins: int = 16, n_cells: int = N_CELLS) -> np.ndarray:
    return np.linspace(0.0, float(n_cells), n_bins + 1)


def default_count_edges(n_bins: int = 16) -> np.ndarray:
    return np.arange(0.0, float(n_bins) + 1.0)


@dataclass
class Elite:
    genome: Any
    fitness: float
    features: Features
    encoding_tag: str
    birth_generation: int
    phenotype: np.ndarray


@dataclass(frozen=True)
class LoopConfig:
    init_population: int = 100
    children_per_generation: int = 10
    max_generations: int = 50_000
    rng_seed: int = 0
    snapshot_every: int = 100

    def __post_init__(self):
        if self.init_population < 1:
            raise ConfigError("init_population must be positive", "loop.init_population")
        if self.children_per_generation < 1:
            raise ConfigError("children_per_generation must be positive", "loop.children_per_generation")
        if self.max_generations < 0:
            raise ConfigError("max_generations must be non-negative", "loop.max_generations")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be positive", "loop.snapshot_every")


class Archive:
    """Grid archive keyed by (area bin, count bin), one elite per bin."""

    def __init__(self, area_edges: Sequence[float], count_edges: Sequence[float]):
        self.area_edges = np.asarray(area_edges, dtype=np.float64)
        self.count_edges = np.asarray(count_edges, dtype=np.float64)
        if len(self.area_edges) < 2 or len(self.count_edges) < 2:
            raise ConfigError("each feature needs at least one bin", "archive")
        if (np.diff(self.area_edges) <= 0).any() or (np.diff(self.count_edges) <= 0).any():
            raise ConfigError("bin edges must be strictly increasing", "archive")
        self.n_area_bins = len(self.area_edges) - 1
        self.n_count_bins = len(self.count_edges) - 1
        self._elites: dict[tuple[int, int], Elite] = {}
        self._order: list[tuple[int, int]] = []  # bins in first-fill order

    @property
    def total_bins(self) -> int:
        return self.n_area_bins * self.n_count_bins

    @property
    def n_filled(self) -> int:
        return len(self._elites)

    def bin_of(self, feats: Features) -> tuple[int, int]:
        """Bin coordinates for a feature pair; values on a shared edge go to the
        lower bin and out-of-range values clamp to the outermost bins."""
        i = int(np.searchsorted(self.area_edges, feats[0], side="left")) - 1
        j = int(np.searchsorted(self.count_edges, feats[1], side="left")) - 1
        i = min(max(i, 0), self.n_area_bins - 1)
        j = min(max(j, 0), self.n_count_bins - 1)
        return (i, j)

    def elite_at(self, bin_coords: tuple[int, int]) -> Elite | None:
        return self._elites.get(bin_coords)

    def elites_in_order(self) -> list[Elite]:
        return [self._elites[k] for k in self._order]

    def items_sorted(self) -> list[tuple[tuple[int, int], Elite]]:
        return sorted(self._elites.items())

    def phenotype_matrix(self) -> np.ndarray:
        """Flattened elite phenotypes stacked in first-fill order, (n, cells)."""
        if not self._order:
            return np.zeros((0, 0), dtype=np.int64)
        return np.stack([self._elites[k].phenotype.ravel() for k in self._order])

    def try_replace(
        self,
        genome: Any,
        phenotype: np.ndarray,
        fitness: float,
        feats: Features,
        encoding_tag: str,
        generation: int,
    ) -> bool:
        """Insert into the bin for ``feats`` if empty or strictly fitter."""
        key = self.bin_of(feats)
        incumbent = self._elites.get(key)
        if incumbent is None:
            self._elites[key] = Elite(genome, fitness, feats, encoding_tag, generation, phenotype)
            self._order.append(key)
            return True
        if fitness > incumbent.fitness:
            self._elites[key] = Elite(genome, fitness, feats, encoding_tag, generation, phenotype)
            return True
        return False

    def sample_filled_bin(self, rng: np.random.Generator) -> tuple[int, int]:
        """Uniform draw over currently filled bins."""
        return self._order[int(rng.integers(self.n_filled))]


def encoding_proportions(archive: Archive) -> dict[str, float]:
    """Fraction of filled bins held by each encoding tag (all-zero when empty)."""
    counts = dict.fromkeys(ENCODING_ORDER, 0)
    for elite in archive.elites_in_order():
        counts[elite.encoding_tag] = counts.get(elite.encoding_tag, 0) + 1
    n = archive.n_filled
    return {tag: (c / n if n else 0.0) for tag, c in counts.items()}


def snapshot_metrics(archive: Archive, generation: int) -> RunMetrics:
    return RunMetrics(
        generation=generation,
        coverage=coverage(archive),
        qd_score=qd_score(archive),
        mean_fitness=mean_fitness(archive),
        phenotypic_diversity=phenotypic_diversity(archive),
        proportions=encoding_proportions(archive),
    )


def run_map_elites(
    encodings: Sequence[Encoding],
    loop: LoopConfig,
    *,
    area_edges: Sequence[float] | None = None,
    count_edges: Sequence[float] | None = None,
    fitness_fn: FitnessFn | None = None,
    features_fn: Callable[[np.ndarray], Features] | None = None,
    on_snapshot: Callable[[RunMetrics], None] | None = None,
) -> tuple[Archive, list[RunMetrics]]:
    """Run MAP-Elites and return the final archive plus the metric stream.

    The initial population is split equally across encodings (leftovers go to
    the encodings listed first). Children are born from parents drawn
    uniformly, with replacement, from the bins filled at generation start and
    inherit their parent's encoding. Snapshots are taken after initialization,
    every ``loop.snapshot_every`` generations, and at the final generation.
    """
    if not encodings:
        raise ConfigError("at least one encoding is required", "encodings")
    rng = np.random.default_rng(loop.rng_seed)
    archive = Archive(
        default_area_edges() if area_edges is None else area_edges,
        default_count_edges() if count_edges is None else count_edges,
    )
    evaluate = fitness_fn if fitness_fn is not None else grid_fitness
    featurize = features_fn if features_fn is not None else grid_features

    k = len(encodings)
    shares = [loop.init_population // k] * k
    for i in range(loop.init_population % k):
        shares[i] += 1
    for encoding, share in zip(encodings, shares):
        for _ in range(share):
            genome = encoding.random(rng)
            phenotype = encoding.decode(genome)
            archive.try_replace(
                genome, phenotype, evaluate(phenotype), featurize(phenotype), encoding.kind, 0
            )

    by_tag = {e.kind: e for e in encodings}
    stream = [snapshot_metrics(archive, 0)]
    if on_snapshot is not None:
        on_snapshot(stream[0])

    for gen in range(1, loop.max_generations + 1):
        batch = []
        for _ in range(loop.children_per_generation):
            parent = archive.elite_at(archive.sample_filled_bin(rng))
            encoding = by_tag[parent.encoding_tag]
            child = encoding.mutate(parent.genome, rng)
            phenotype = encoding.decode(child)
            batch.append((child, phenotype, parent.encoding_tag))
        for child, phenotype, tag in batch:
            archive.try_replace(
                child, phenotype, evaluate(phenotype), featurize(phenotype), tag, gen
            )
        if gen % loop.snapshot_every == 0 or gen == loop.max_generations:
            snap = snapshot_metrics(archive, gen)
            stream.append(snap)
            if on_snapshot is not None:
                on_snapshot(snap)
    return archive, stream


def archive_to_json_dict(archive: Archive, encodings: Sequence[Encoding] = ()) -> dict:
    """JSON-ready archive snapshot: edges, encoding configs, per-bin elites."""
    elites = []
    for (i, j), e in archive.items_sorted():
        elites.append(
            {
                "bin": [i, j],
                "fitness": e.fitness,
                "features": [int(e.features[0]), int(e.features[1])],
                "encoding_tag": e.encoding_tag,
                "birth_generation": e.birth_generation,
                "genome": genome_to_json(e.genome),
            }
        )
    return {
        "area_edges": [float(v) for v in archive.area_edges],
        "count_edges": [float(v) for v in archive.count_edges],
        "encodings": [enc.to_config() for enc in encodings],
        "elites": elites,
    }


def write_archive_json(path, archive: Archive, encodings: Sequence[Encoding] = ()) -> None:
    with open(path, "w") as fh:
        json.dump(archive_to_json_dict(archive, encodings), fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_archive_json(path) -> tuple[Archive, list[dict]]:
    """Load an archive snapshot; elite phenotypes are re-decoded when the stored
    encoding configs allow it, otherwise left as None."""
    from .encodings import build_encoding

    with open(path) as fh:
        data = json.load(fh)
    archive = Archive(data["area_edges"], data["count_edges"])
    encoding_configs = data.get("encodings", [])
    decoders = {}
    for cfg in encoding_configs:
        enc = build_encoding(cfg)
        decoders[enc.kind] = enc
    for rec in data["elites"]:
        genome = genome_from_json(rec["genome"])
        tag = rec["encoding_tag"]
        phenotype = decoders[tag].decode(genome) if tag in decoders else None
        elite = Elite(
            genome=genome,
            fitness=float(rec["fitness"]),
            features=Features(int(rec["features"][0]), int(rec["features"][1])),
            encoding_tag=tag,
            birth_generation=int(rec["birth_generation"]),
            phenotype=phenotype,
        )
        key = (int(rec["bin"][0]), int(rec["bin"][1]))
        archive._elites[key] = elite
        archive._order.append(key)
    return archive, encoding_configs
