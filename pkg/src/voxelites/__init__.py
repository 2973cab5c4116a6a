"""Quality-diversity search over voxelized building masses.

MAP-Elites evolves an archive of 11x14 height grids binned by built area and
building count, under five interchangeable genome encodings (direct,
dictionary, parametric, CPPN, cellular automaton) that can also compete inside
one shared archive.
"""

from .encodings import (
    ENCODING_ORDER,
    ENCODINGS,
    CaEncoding,
    CppnEncoding,
    DictionaryEncoding,
    DirectEncoding,
    Encoding,
    ParametricEncoding,
    build_encoding,
    genome_from_json,
    genome_to_json,
)
from .errors import ConfigError
from .metrics import (
    RunMetrics,
    TTestResult,
    coverage,
    l01_distance,
    mean_fitness,
    pareto_fronts,
    phenotypic_diversity,
    qd_score,
    select_pareto,
    welch_t_test,
)
from .phenotype import (
    GRID_COLS,
    GRID_ROWS,
    MAX_LEVEL,
    METERS_PER_LEVEL,
    N_CELLS,
    Features,
    features,
    fitness,
    validate_grid,
)
from .qd import (
    Archive,
    Elite,
    LoopConfig,
    encoding_proportions,
    read_archive_json,
    run_map_elites,
    write_archive_json,
)

__version__ = "0.1.0"

__all__ = [
    "Archive",
    "CaEncoding",
    "ConfigError",
    "CppnEncoding",
    "DictionaryEncoding",
    "DirectEncoding",
    "Elite",
    "Encoding",
    "ENCODING_ORDER",
    "ENCODINGS",
    "Features",
    "GRID_COLS",
    "GRID_ROWS",
    "LoopConfig",
    "MAX_LEVEL",
    "METERS_PER_LEVEL",
    "N_CELLS",
    "ParametricEncoding",
    "RunMetrics",
    "TTestResult",
    "build_encoding",
    "coverage",
    "encoding_proportions",
    "features",
    "fitness",
    "genome_from_json",
    "genome_to_json",
    "l01_distance",
    "mean_fitness",
    "pareto_fronts",
    "phenotypic_diversity",
    "qd_score",
    "read_archive_json",
    "run_map_elites",
    "select_pareto",
    "validate_grid",
    "welch_t_test",
    "write_archive_json",
]
