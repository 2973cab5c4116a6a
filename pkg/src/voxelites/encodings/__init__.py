"""Genome encodings and the registry that maps tags to implementations."""

from __future__ import annotations

from typing import Any

from ..errors import ConfigError
from .base import Encoding, default_grid_shape
from .ca import CaEncoding, CaGenome
from .cppn import ACTIVATION_NAMES, CppnEncoding, CppnGenome
from .dictionary import DictionaryEncoding, DictionaryGenome
from .direct import DirectEncoding, DirectGenome
from .parametric import ParametricEncoding, ParametricGenome

# Registry order doubles as the reporting order for proportion columns.
ENCODING_ORDER = ("direct", "dictionary", "parametric", "cppn", "ca")

ENCODINGS: dict[str, type[Encoding]] = {
    "direct": DirectEncoding,
    "dictionary": DictionaryEncoding,
    "parametric": ParametricEncoding,
    "cppn": CppnEncoding,
    "ca": CaEncoding,
}

_GENOME_TYPES = {
    "direct": DirectGenome,
    "dictionary": DictionaryGenome,
    "parametric": ParametricGenome,
    "cppn": CppnGenome,
    "ca": CaGenome,
}


def build_encoding(config: dict, *, rows: int | None = None, cols: int | None = None) -> Encoding:
    """Instantiate an encoding from its config dict (``kind`` plus hyperparameters)."""
    if not isinstance(config, dict):
        raise ConfigError("encoding config must be a mapping", "encodings")
    params = dict(config)
    kind = params.pop("kind", None)
    if kind not in ENCODINGS:
        raise ConfigError(
            f"unknown encoding kind {kind!r}; expected one of {sorted(ENCODINGS)}",
            "encodings.kind",
        )
    if rows is not None:
        params.setdefault("rows", rows)
    if cols is not None:
        params.setdefault("cols", cols)
    if "thresholds" in params and isinstance(params["thresholds"], list):
        params["thresholds"] = tuple(params["thresholds"])
    cls = ENCODINGS[kind]
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(str(exc), f"encodings.{kind}") from None


def genome_to_json(genome: Any) -> dict:
    """Serializable dict with an ``encoding_tag`` discriminator."""
    out = {"encoding_tag": genome.kind}
    out.update(genome.to_json_dict())
    return out


def genome_from_json(data: dict) -> Any:
    tag = data.get("encoding_tag")
    if tag not in _GENOME_TYPES:
        raise ValueError(f"unknown encoding_tag {tag!r}")
    payload = {k: v for k, v in data.items() if k != "encoding_tag"}
    return _GENOME_TYPES[tag].from_json_dict(payload)


__all__ = [
    "ACTIVATION_NAMES",
    "ENCODINGS",
    "ENCODING_ORDER",
    "Encoding",
    "CaEncoding",
    "CaGenome",
    "CppnEncoding",
    "CppnGenome",
    "DictionaryEncoding",
    "DictionaryGenome",
    "DirectEncoding",
    "DirectGenome",
    "ParametricEncoding",
    "ParametricGenome",
    "build_encoding",
    "default_grid_shape",
    "genome_from_json",
    "genome_to_json",
]
