"""Acceptance checks at the scales the toolkit is meant to run.

The desk-scale runs (full 11x14 domain, 256 bins, 5,000 generations, 10 seeds
per runset) live in a session fixture shared by the ordering and
multi-encoding tests. Expect a few minutes per encoding on one core.
"""

import itertools
import time

import numpy as np
import pytest

from voxelites.encodings import (
    CaEncoding,
    CppnEncoding,
    DictionaryEncoding,
    DirectEncoding,
    ParametricEncoding,
)
from voxelites.experiment import parse_experiment_config, run_experiment
from voxelites.metrics import (
    ALPHA,
    coverage,
    l01_distance,
    mean_fitness,
    pareto_fronts,
    phenotypic_diversity,
    qd_score,
    welch_t_test,
)
from voxelites.phenotype import Features, features, fitness
from voxelites.qd import Archive, LoopConfig, default_area_edges, default_count_edges, run_map_elites

SINGLE_SETS = {
    "direct": (DirectEncoding,),
    "dictionary": (DictionaryEncoding,),
    "parametric": (ParametricEncoding,),
    "cppn": (CppnEncoding,),
    "ca": (CaEncoding,),
}
DESK_SEEDS = tuple(range(10))
DESK_GENERATIONS = 5000


def median(values):
    return float(np.median(values))


class TestBruteForceOracle:
    """MAP-Elites on a 2x2 toy domain against exhaustive enumeration."""

    AREA_EDGES = (-1.0, 0.0, 1.0, 2.0, 3.0, 4.0)
    COUNT_EDGES = (-1.0, 0.0, 1.0, 2.0)

    def test_direct_encoding_finds_every_bin_optimum(self):
        started = time.perf_counter()
        reference = Archive(self.AREA_EDGES, self.COUNT_EDGES)
        optima: dict[tuple[int, int], float] = {}
        for levels in itertools.product(range(4), repeat=4):
            grid = np.array(levels, dtype=np.int64).reshape(2, 2)
            key = reference.bin_of(features(grid))
            optima[key] = max(optima.get(key, -1.0), fitness(grid))

        encoding = DirectEncoding(rows=2, cols=2, p_mut=0.25)
        solved = 0
        for seed in range(5):
            loop = LoopConfig(max_generations=2000, rng_seed=seed)
            archive, _ = run_map_elites(
                [encoding], loop, area_edges=self.AREA_EDGES, count_edges=self.COUNT_EDGES
            )
            found = {key: elite.fitness for key, elite in archive.items_sorted()}
            if set(found) == set(optima) and all(
                found[key] == optima[key] for key in optima
            ):
                solved += 1
        elapsed = time.perf_counter() - started
        assert solved >= 4, f"only {solved}/5 seeds reached all bin optima"
        assert elapsed < 10.0, f"toy oracle took {elapsed:.1f}s"


class TestMetricOracles:
    """Archive metrics against double-loop brute force on tiny archives."""

    def build_archive(self, n_elites, seed):
        rng = np.random.default_rng(seed)
        archive = Archive(default_area_edges(), default_count_edges())
        while archive.n_filled < n_elites:
            grid = rng.integers(0, 4, size=(11, 14))
            archive.try_replace(None, grid, fitness(grid), features(grid), "direct", 0)
        return archive

    @pytest.mark.parametrize("n_elites,seed", [(1, 0), (4, 1), (7, 2), (10, 3)])
    def test_counting_metrics_match_brute_force(self, n_elites, seed):
        archive = self.build_archive(n_elites, seed)
        elites = archive.elites_in_order()
        assert coverage(archive) == pytest.approx(len(elites) / 256.0, rel=1e-9)
        assert qd_score(archive) == pytest.approx(
            sum(e.fitness for e in elites), rel=1e-9
        )

    @pytest.mark.parametrize("n_elites,seed", [(2, 4), (5, 5), (10, 6)])
    def test_diversity_matches_double_loop(self, n_elites, seed):
        archive = self.build_archive(n_elites, seed)
        flats = [e.phenotype.ravel() for e in archive.elites_in_order()]
        expected = 0.0
        for i in range(len(flats)):
            for j in range(i + 1, len(flats)):
                inner = sum(abs(float(a) - float(b)) ** 0.1 for a, b in zip(flats[i], flats[j]))
                expected += inner**10
        assert phenotypic_diversity(archive) == pytest.approx(expected, rel=1e-9)

    def test_l01_worked_examples_are_exact(self):
        base = np.zeros(154)
        assert l01_distance(base, base) == 0.0
        one = base.copy()
        one[17] = 1.0
        assert l01_distance(base, one) == 1.0
        two = one.copy()
        two[99] = 1.0
        assert l01_distance(base, two) == 1024.0


class TestDictionaryEquivalence:
    def test_thousand_random_grids_round_trip(self):
        encoding = DictionaryEncoding()
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            grid = rng.integers(0, 4, size=(11, 14))
            again = encoding.decode(encoding.encode(grid))
            np.testing.assert_array_equal(again, grid)


@pytest.fixture(scope="session")
def desk_runs():
    """Final snapshot per seed (and full streams) for all six runsets."""
    runsets = {name: [cls() for cls in classes] for name, classes in SINGLE_SETS.items()}
    runsets["multi"] = [cls() for group in SINGLE_SETS.values() for cls in group]
    results = {}
    for name, encodings in runsets.items():
        finals, streams = [], []
        for seed in DESK_SEEDS:
            loop = LoopConfig(
                max_generations=DESK_GENERATIONS, rng_seed=seed, snapshot_every=500
            )
            _, stream = run_map_elites(encodings, loop)
            finals.append(stream[-1])
            streams.append(stream)
        results[name] = (finals, streams)
    return results


class TestDeskScaleOrderings:
    """Qualitative encoding comparisons on the full domain."""

    def finals(self, desk_runs, name, field):
        return [getattr(m, field) for m in desk_runs[name][0]]

    def test_ca_mean_archive_fitness_is_lowest(self, desk_runs):
        fits = {name: self.finals(desk_runs, name, "mean_fitness") for name in SINGLE_SETS}
        medians = {name: median(vals) for name, vals in fits.items()}
        problems = []
        for other in ("direct", "dictionary", "parametric", "cppn"):
            result = welch_t_test(fits["ca"], fits[other])
            if not (medians["ca"] < medians[other] and result.p_value < ALPHA):
                problems.append(f"ca vs {other}: p={result.p_value:.3g}")
        assert not problems, f"medians={medians}; failed orderings: {problems}"

    def test_ca_diversity_at_least_ten_times_local_encodings(self, desk_runs):
        div = {name: self.finals(desk_runs, name, "phenotypic_diversity") for name in SINGLE_SETS}
        medians = {name: median(vals) for name, vals in div.items()}
        problems = []
        for other in ("direct", "dictionary", "parametric"):
            result = welch_t_test(div["ca"], div[other])
            ratio = medians["ca"] / medians[other]
            if not (ratio >= 10.0 and medians["ca"] > medians[other] and result.p_value < ALPHA):
                problems.append(f"ca vs {other}: ratio={ratio:.1f} p={result.p_value:.3g}")
        assert not problems, f"medians={medians}; failed orderings: {problems}"

    def test_ca_coverage_reaches_at_least_direct(self, desk_runs):
        ca = self.finals(desk_runs, "ca", "coverage")
        direct = self.finals(desk_runs, "direct", "coverage")
        result = welch_t_test(ca, direct)
        assert median(ca) >= median(direct)
        assert result.p_value < ALPHA, f"coverage medians ca={median(ca)} direct={median(direct)}"


class TestMultiEncoding:
    def test_final_qd_median_within_single_encoding_range(self, desk_runs):
        singles = {
            name: median([m.qd_score for m in desk_runs[name][0]]) for name in SINGLE_SETS
        }
        multi = median([m.qd_score for m in desk_runs["multi"][0]])
        low, high = min(singles.values()), max(singles.values())
        assert low <= multi <= high, f"multi={multi} outside [{low}, {high}] ({singles})"

    def test_extinction_is_irreversible_in_every_stream(self, desk_runs):
        for stream in desk_runs["multi"][1]:
            for tag in ("direct", "dictionary", "parametric", "cppn", "ca"):
                values = [m.proportions[tag] for m in stream]
                dead = False
                for value in values:
                    if dead:
                        assert value == 0.0, f"{tag} came back from extinction: {values}"
                    dead = dead or value == 0.0


class TestDeterminism:
    CONFIG = {
        "grid": {"rows": 11, "cols": 14},
        "loop": {"init_population": 60, "children_per_generation": 10, "max_generations": 250},
        "archive": {"area_bins": 16, "count_bins": 16},
        "fitness": {"inflow_axis": 0},
        "encodings": [{"kind": "direct"}, {"kind": "ca"}],
        "replicates": 2,
        "base_seed": 41,
        "snapshot_cadence": 50,
    }

    def test_reruns_are_byte_identical(self, tmp_path):
        payloads = []
        for run_dir in ("first", "second"):
            config = dict(self.CONFIG, output_dir=str(tmp_path / run_dir))
            manifest = run_experiment(parse_experiment_config(config))
            blob = {}
            for group in manifest["files"].values():
                for rel in group:
                    blob[rel] = (tmp_path / run_dir / rel).read_bytes()
            payloads.append(blob)
        assert payloads[0].keys() == payloads[1].keys()
        for rel in payloads[0]:
            assert payloads[0][rel] == payloads[1][rel], f"{rel} differs between reruns"


class TestWelchOracle:
    def test_worked_example_t_statistic(self):
        lighter = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1,
                   19.6, 19.0, 21.7, 21.4]
        heavier = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9,
                   22.8, 23.2, 21.7, 24.5, 22.4, 24.1, 23.4]
        result = welch_t_test(lighter, heavier)
        assert abs(result.t_statistic - (-2.8320681388174465)) <= 0.001
        assert result.p_value == pytest.approx(0.009637582001674212, rel=1e-6)

    def test_identical_samples_are_not_significant(self):
        sample = [4.0, 5.0, 6.0, 7.0]
        result = welch_t_test(sample, sample)
        assert result.p_value == 1.0
        assert not result.significant


_PROPERTY_CLOCK = {}


@pytest.fixture()
def property_clock():
    _PROPERTY_CLOCK.setdefault("start", time.perf_counter())
    return _PROPERTY_CLOCK["start"]


def all_encodings():
    return [
        DirectEncoding(),
        DictionaryEncoding(),
        ParametricEncoding(),
        CppnEncoding(),
        CaEncoding(),
    ]


class TestPropertySuites:
    """Randomized fuzzing of the module invariants, 10,000 cases each."""

    CASES = 10_000

    def test_decoders_are_total(self, property_clock):
        per_encoding = self.CASES // 5
        for encoding in all_encodings():
            rng = np.random.default_rng(300)
            for _ in range(per_encoding):
                grid = encoding.decode(encoding.random(rng))
                assert grid.shape == (11, 14)
                assert np.issubdtype(grid.dtype, np.integer)
                assert grid.min() >= 0 and grid.max() <= 3

    def test_mutation_preserves_genome_invariants(self, property_clock):
        per_encoding = self.CASES // 5
        for encoding in all_encodings():
            rng = np.random.default_rng(301)
            genome = encoding.random(rng)
            for _ in range(per_encoding):
                genome = encoding.mutate(genome, rng)
                encoding.validate(genome)
        # decode of the final mutant stays in range
        grid = encoding.decode(genome)
        assert grid.min() >= 0 and grid.max() <= 3

    def test_per_bin_fitness_is_monotone(self, property_clock):
        rng = np.random.default_rng(302)
        archive = Archive(default_area_edges(), default_count_edges())
        best: dict[tuple[int, int], float] = {}
        grid = np.zeros((11, 14), dtype=np.int64)
        for _ in range(self.CASES):
            feats = Features(int(rng.integers(0, 155)), int(rng.integers(0, 17)))
            archive.try_replace(None, grid, float(rng.random()), feats, "direct", 0)
            key = archive.bin_of(feats)
            stored = archive.elite_at(key).fitness
            assert stored >= best.get(key, 0.0)
            best[key] = stored

    def test_coverage_is_monotone(self, property_clock):
        rng = np.random.default_rng(303)
        archive = Archive(default_area_edges(), default_count_edges())
        grid = np.zeros((11, 14), dtype=np.int64)
        filled = 0
        for _ in range(self.CASES):
            feats = Features(int(rng.integers(0, 155)), int(rng.integers(0, 17)))
            archive.try_replace(None, grid, float(rng.random()), feats, "ca", 0)
            assert archive.n_filled >= filled
            filled = archive.n_filled

    def test_pareto_fronts_respect_dominance(self, property_clock):
        rng = np.random.default_rng(304)

        def dominates(p, q):
            return p[0] >= q[0] and p[1] >= q[1] and p != q

        for _ in range(self.CASES // 10):
            points = [tuple(v) for v in rng.integers(0, 8, size=(10, 2)).tolist()]
            fronts = pareto_fronts(points)
            assert sorted(i for front in fronts for i in front) == list(range(len(points)))
            for depth, front in enumerate(fronts):
                for i in front:
                    assert not any(
                        dominates(points[j], points[i]) for j in front if j != i
                    )
                    if depth:
                        assert any(
                            dominates(points[j], points[i]) for j in fronts[depth - 1]
                        )
        elapsed = time.perf_counter() - _PROPERTY_CLOCK["start"]
        assert elapsed < 120.0, f"property suites took {elapsed:.1f}s"
