"""Run configuration: flat ``key = value`` files with command-line overrides.

Example::

    input = soybean.csv
    traits = EPV,PH,NPB,LS,NPPP,SW,SYPP,DPI
    categorical = EPV,LS
    encode.EPV = Poor,Good,Very Good
    encode.LS = Slight,Moderate,Severe
    sample_size = 500
    k = 10            # or "auto" for the eigengap rule
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ConfigError
from .hclust import ENGINES, LINKAGES
from .simgraph import MEASURES
from .spectral import KINDS
from .validate import VARIANTS

SAMPLERS = ("pivotal", "vq", "none")
ALGORITHMS = ("spectral", "hierarchical")
OUTPUT_ENV = "PHENOCLUST_OUTPUT"


@dataclass
class RunConfig:
    input: str | None = None
    delimiter: str = ","
    traits: list[str] | None = None
    categorical: list[str] = field(default_factory=list)
    encodings: dict[str, list[str]] = field(default_factory=dict)
    sample_size: int = 500
    sampler: str = "pivotal"
    algorithm: str = "spectral"
    measure: str = "squared_euclidean"
    laplacian: str = "type3"
    linkage: str = "average"
    hc_engine: str = "naive"
    k: int | None = 10
    k_max: int = 50
    seed: int = 0
    restarts: int = 10
    vq_restarts: int = 1
    reverse_measure: str | None = None
    silhouette_variant: str = "pooled"
    row_normalize: bool = False
    shuffle: bool = False
    output: str = "out"
    workers: int = 1

    @property
    def auto_k(self) -> bool:
        return self.k is None

    @property
    def schema(self) -> dict[str, str]:
        return {name: "categorical" for name in self.categorical}

    def validate(self) -> "RunConfig":
        _choice("sampler", self.sampler, SAMPLERS)
        _choice("algorithm", self.algorithm, ALGORITHMS)
        _choice("measure", self.measure, MEASURES)
        _choice("laplacian", self.laplacian, KINDS)
        _choice("linkage", self.linkage, LINKAGES)
        _choice("hc_engine", self.hc_engine, ENGINES)
        _choice("silhouette_variant", self.silhouette_variant, VARIANTS)
        if self.reverse_measure is not None:
            _choice("reverse_measure", self.reverse_measure, MEASURES)
        if self.k is not None and self.k < 2:
            raise ConfigError(f"k must be at least 2 or 'auto', got {self.k}")
        if self.k_max < 2:
            raise ConfigError(f"k_max must be at least 2, got {self.k_max}")
        if self.sampler != "none" and self.sample_size < 2:
            raise ConfigError(f"sample_size must be at least 2, got {self.sample_size}")
        if self.restarts < 1 or self.vq_restarts < 1 or self.workers < 1:
            raise ConfigError("restarts, vq_restarts and workers must be positive")
        missing = [c for c in self.categorical if c not in self.encodings]
        if missing:
            raise ConfigError(f"categorical columns without an encoding: {missing}")
        if self.k is None and self.algorithm != "spectral":
            raise ConfigError("k = auto (eigengap) is only available for the spectral algorithm")
        return self

    def snapshot(self) -> dict[str, Any]:
        """Settings that determine the results (paths and parallelism excluded)."""
        d = dataclasses.asdict(self)
        for key in ("input", "output", "workers"):
            d.pop(key)
        d["k"] = "auto" if self.k is None else self.k
        return d


def _choice(key: str, value: str, allowed) -> None:
    if value not in allowed:
        raise ConfigError(f"{key}: {value!r} is not one of {', '.join(allowed)}")


def _to_bool(key: str, raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _to_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


_INT_KEYS = {"sample_size", "k_max", "seed", "restarts", "vq_restarts", "workers"}
_BOOL_KEYS = {"row_normalize", "shuffle"}
_LIST_KEYS = {"traits", "categorical"}


def coerce(key: str, raw: Any) -> Any:
    """Convert a textual setting to the type of the corresponding field."""
    if not isinstance(raw, str):
        return raw
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if key == "k":
        if raw.strip().lower() == "auto":
            return None
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"k: expected an integer or 'auto', got {raw!r}") from None
    if key in _BOOL_KEYS:
        return _to_bool(key, raw)
    if key in _LIST_KEYS:
        return _to_list(raw)
    if key == "delimiter":
        return "\t" if raw in ("\\t", "tab") else raw
    if key == "reverse_measure" and raw.strip().lower() in ("", "none"):
        return None
    return raw.strip()


def parse_config_text(text: str) -> dict[str, Any]:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    values: dict[str, Any] = {}
    encodings: dict[str, list[str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key.startswith("encode."):
            encodings[key[len("encode."):]] = _to_list(raw)
            continue
        if key not in fields or key == "encodings":
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = coerce(key, raw)
    if encodings:
        values["encodings"] = encodings
    return values


def load_config(
    path: str | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Defaults, then the config file, then the output env var, then explicit overrides."""
    values: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    env = os.environ if environ is None else environ
    if env.get(OUTPUT_ENV):
        values["output"] = env[OUTPUT_ENV]
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key == "encodings":
            # per-column maps from flags add to (or replace) those from the file
            values["encodings"] = {**values.get("encodings", {}), **raw}
        else:
            values[key] = coerce(key, raw)
    try:
        return RunConfig(**values).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
