"""Figure rendering: archive heatmaps, phenotype tile maps, metric curves.

All figures are written as SVG. Byte-identical output for identical input is
part of the contract, so the SVG hash salt is pinned and the Date metadata is
stripped; nothing else in the pipeline is time-dependent.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import BoundaryNorm, ListedColormap
from matplotlib.patches import Patch

from .encodings import ENCODING_ORDER
from .phenotype import MAX_LEVEL, METERS_PER_LEVEL
from .qd import Archive

_HASHSALT = {"svg.hashsalt": "voxelites"}

ENCODING_COLORS = {
    "direct": "#4c72b0",
    "dictionary": "#dd8452",
    "parametric": "#55a868",
    "cppn": "#c44e52",
    "ca": "#8172b3",
}

LEVEL_SHADES = ("#f7f7f7", "#cccccc", "#969696", "#525252")


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_archive(archive: Archive, path, color: str = "fitness") -> None:
    """Draw the archive as a tile grid, colored by fitness or encoding tag.

    X is the built-area bin, Y the building-count bin; empty bins stay white.
    """
    if color not in ("fitness", "encoding"):
        raise ValueError(f"unknown color mode {color!r}")
    na, nc = archive.n_area_bins, archive.n_count_bins
    with plt.rc_context(_HASHSALT):
        fig, ax = plt.subplots(figsize=(7.0, 5.6))
        image = np.ones((nc, na, 4))
        if color == "fitness":
            cmap = plt.get_cmap("viridis")
            for (i, j), elite in archive.items_sorted():
                image[j, i] = cmap(elite.fitness)
        else:
            for (i, j), elite in archive.items_sorted():
                rgba = matplotlib.colors.to_rgba(ENCODING_COLORS[elite.encoding_tag])
                image[j, i] = rgba
        ax.imshow(image, origin="lower", interpolation="nearest", aspect="auto")
        ax.set_xticks(np.arange(-0.5, na, 1), minor=True)
        ax.set_yticks(np.arange(-0.5, nc, 1), minor=True)
        ax.grid(which="minor", color="#dddddd", linewidth=0.5)
        ax.tick_params(which="minor", length=0)
        ax.set_xlabel("built-area bin")
        ax.set_ylabel("building-count bin")
        if color == "fitness":
            mappable = plt.cm.ScalarMappable(cmap="viridis")
            mappable.set_clim(0.0, 1.0)
            fig.colorbar(mappable, ax=ax, label="fitness")
        else:
            handles = [
                Patch(facecolor=ENCODING_COLORS[tag], label=tag)
                for tag in ENCODING_ORDER
            ]
            ax.legend(handles=handles, loc="center left", bbox_to_anchor=(1.02, 0.5))
            fig.subplots_adjust(right=0.78)
        _save(fig, path)


def render_phenotype(grid: np.ndarray, path) -> None:
    """Top-down tile map of one height grid with a meter-labeled level legend."""
    grid = np.asarray(grid)
    with plt.rc_context(_HASHSALT):
        fig, ax = plt.subplots(figsize=(6.4, 5.2))
        cmap = ListedColormap(LEVEL_SHADES)
        norm = BoundaryNorm(np.arange(-0.5, MAX_LEVEL + 1), cmap.N)
        mesh = ax.imshow(grid, cmap=cmap, norm=norm, interpolation="nearest")
        ax.set_xticks(np.arange(-0.5, grid.shape[1], 1), minor=True)
        ax.set_yticks(np.arange(-0.5, grid.shape[0], 1), minor=True)
        ax.grid(which="minor", color="#ffffff", linewidth=0.8)
        ax.tick_params(which="minor", length=0)
        bar = fig.colorbar(mesh, ax=ax, ticks=np.arange(0, MAX_LEVEL + 1))
        bar.ax.set_yticklabels([f"{level * METERS_PER_LEVEL} m" for level in range(MAX_LEVEL + 1)])
        bar.set_label("height")
        _save(fig, path)


def metric_curves(
    curves: Sequence[tuple[str, Sequence[int], Sequence[float]]], metric: str, path
) -> None:
    """Line chart of one metric over generations, one line per labeled run."""
    with plt.rc_context(_HASHSALT):
        fig, ax = plt.subplots(figsize=(7.0, 4.6))
        positive = True
        for label, gens, values in curves:
            ax.plot(gens, values, label=label)
            positive = positive and all(v > 0 for v in values)
        if metric == "phenotypic_diversity" and positive:
            ax.set_yscale("log")
        ax.set_xlabel("generation")
        ax.set_ylabel(metric.replace("_", " "))
        if curves:
            ax.legend()
        _save(fig, Path(path))
