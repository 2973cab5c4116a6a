"""Archive quality metrics, significance testing and Pareto ranking.

The four archive metrics (coverage, QD-score, mean fitness, phenotypic
diversity) summarize one archive. Welch's t-test compares metric samples
across runs, and non-dominated sorting ranks hyperparameter configurations
by (mean fitness, phenotypic diversity).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy.special import betainc

from .encodings import ENCODING_ORDER

if TYPE_CHECKING:
    from .qd import Archive

ALPHA = 0.05

METRICS_HEADER = (
    "generation,coverage,qd_score,mean_fitness,phenotypic_diversity,"
    "prop_direct,prop_dictionary,prop_parametric,prop_cppn,prop_ca"
)


@dataclass(frozen=True)
class RunMetrics:
    """One metrics snapshot of an archive at a given generation."""

    generation: int
    coverage: float
    qd_score: float
    mean_fitness: float
    phenotypic_diversity: float
    proportions: dict[str, float]

    def csv_row(self) -> str:
        cells = [
            str(self.generation),
            repr(self.coverage),
            repr(self.qd_score),
            repr(self.mean_fitness),
            repr(self.phenotypic_diversity),
        ]
        cells += [repr(self.proportions.get(tag, 0.0)) for tag in ENCODING_ORDER]
        return ",".join(cells)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    significant: bool


def coverage(archive: "Archive") -> float:
    """Fraction of bins holding an elite."""
    return archive.n_filled / archive.total_bins


def qd_score(archive: "Archive") -> float:
    """Sum of elite fitness over filled bins (empty bins contribute nothing)."""
    return float(sum(e.fitness for e in archive.elites_in_order()))


def mean_fitness(archive: "Archive") -> float:
    """Average elite fitness; 0.0 for an empty archive."""
    n = archive.n_filled
    return qd_score(archive) / n if n else 0.0


def l01_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """(sum_i |a_i - b_i|^0.1)^10, the L0.1 distance between flat vectors."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ValueError(f"length mismatch: {av.shape} vs {bv.shape}")
    return float((np.abs(av - bv) ** 0.1).sum() ** 10)


def phenotypic_diversity(archive: "Archive") -> float:
    """Sum of L0.1 distances over unordered elite pairs (each pair counted once)."""
    pheno = archive.phenotype_matrix()
    return pairwise_l01_sum(pheno)


def pairwise_l01_sum(pheno: np.ndarray) -> float:
    """Unordered pairwise L0.1 distance sum over the rows of ``pheno``.

    Rows are integer height-level vectors, so |difference| takes few values and
    a lookup table replaces the fractional power on the hot path.
    """
    n = len(pheno)
    if n < 2:
        return 0.0
    pheno = np.asarray(pheno)
    if np.issubdtype(pheno.dtype, np.integer):
        span = int(pheno.max() - pheno.min()) if pheno.size else 0
        table = np.arange(span + 1, dtype=np.float64) ** 0.1
        total = 0.0
        for i in range(n - 1):
            diffs = np.abs(pheno[i + 1 :] - pheno[i])
            total += float((table[diffs].sum(axis=1) ** 10).sum())
        return total
    total = 0.0
    for i in range(n - 1):
        total += float(((np.abs(pheno[i + 1 :] - pheno[i]) ** 0.1).sum(axis=1) ** 10).sum())
    return total


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> TTestResult:
    """Welch's unequal-variance two-sided t-test.

    The p-value comes from the regularized incomplete beta form of the
    t-distribution survival function. Two degenerate zero-variance samples
    yield p = 1 when the means agree and p = 0 when they differ.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    na, nb = a.size, b.size
    va, vb = a.var(ddof=1), b.var(ddof=1)
    se_sq = va / na + vb / nb
    if se_sq == 0.0:
        df = float(na + nb - 2)
        if a.mean() == b.mean():
            return TTestResult(0.0, df, 1.0, False)
        t = float("inf") if a.mean() > b.mean() else float("-inf")
        return TTestResult(t, df, 0.0, True)
    t = float((a.mean() - b.mean()) / np.sqrt(se_sq))
    df = float(se_sq**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TTestResult(t, df, p, p < ALPHA)


def pareto_fronts(points: Sequence[tuple[float, float]]) -> list[list[int]]:
    """Non-dominated sorting of (mean_fitness, diversity) points, both maximized.

    Returns fronts as lists of point indices, best front first.
    """
    if not points:
        raise ValueError("points must be non-empty")
    pts = np.asarray(points, dtype=np.float64)
    remaining = list(range(len(pts)))
    fronts: list[list[int]] = []
    while remaining:
        front = []
        for i in remaining:
            dominated = False
            for j in remaining:
                if j == i:
                    continue
                if (pts[j] >= pts[i]).all() and (pts[j] > pts[i]).any():
                    dominated = True
                    break
            if not dominated:
                front.append(i)
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def select_pareto(points: Sequence[tuple[float, float]], count: int = 4) -> list[int]:
    """Indices of the best ``count`` points walking fronts in rank order.

    Within a front, higher fitness goes first; remaining ties keep the lower
    point index.
    """
    chosen: list[int] = []
    for front in pareto_fronts(points):
        ranked = sorted(front, key=lambda i: (-points[i][0], i))
        for i in ranked:
            if len(chosen) == count:
                return chosen
            chosen.append(i)
    return chosen


def write_metrics_csv(path, rows: Iterable[RunMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(METRICS_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")


def read_metrics_csv(path) -> list[RunMetrics]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            props = {tag: float(rec[f"prop_{tag}"]) for tag in ENCODING_ORDER}
            out.append(
                RunMetrics(
                    generation=int(rec["generation"]),
                    coverage=float(rec["coverage"]),
                    qd_score=float(rec["qd_score"]),
                    mean_fitness=float(rec["mean_fitness"]),
                    phenotypic_diversity=float(rec["phenotypic_diversity"]),
                    proportions=props,
                )
            )
    return out


def write_significance_matrix(path, labels: Sequence[str], samples: Sequence[Sequence[float]]) -> None:
    """CSV matrix of pairwise Welch p-values between the given samples."""
    if len(labels) != len(samples):
        raise ValueError("labels and samples must align")
    with open(path, "w", newline="") as fh:
        fh.write("," + ",".join(labels) + "\n")
        for label, sample in zip(labels, samples):
            cells = [label]
            for other in samples:
                cells.append(repr(welch_t_test(sample, other).p_value))
            fh.write(",".join(cells) + "\n")
