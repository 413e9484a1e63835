"""Pipeline configuration: TOML or JSON, every default embedded.

The two formats describe the same document; ``load_config`` picks the
parser by file suffix and ``default_document`` is what ``print-config``
emits.
"""

from __future__ import annotations

import copy
import datetime as dt
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .evaluation import ThresholdPolicy
from .forecasters import Kind
from .forecasters.neural import ANN_DEFAULT_GRID, LSTM_DEFAULT_GRID
from .forecasters.svr import DEFAULT_GRID as SVR_DEFAULT_GRID
from .mining import RepoSource
from .timeseries import boundaries_from_periods

INDEX_MODES = ("daily", "commits")


class ConfigError(ValueError):
    pass


def default_document() -> dict:
    return {
        "seed": 0,
        "jobs": 1,
        "index": "daily",
        "min_revisions": 20,
        "out": "out",
        "repo": {"root": ".", "include": ["*.mdl"]},
        "split": {"b1": "2015-12-31", "b2": "2016-03-31"},
        "policy": {"max_error_pct": 8.3, "horizon_days": 28, "alpha": 0.05, "short_steps": 4},
        "forecast": {
            "approaches": [k.value for k in Kind],
            "runs": 5,
            "grids": {
                "SVR": copy.deepcopy(SVR_DEFAULT_GRID),
                "ANN": copy.deepcopy(ANN_DEFAULT_GRID),
                "LSTM": copy.deepcopy(LSTM_DEFAULT_GRID),
            },
        },
        "compare": {"pairwise": False},
    }


@dataclass(frozen=True)
class PipelineConfig:
    repo: RepoSource
    b1: dt.date
    b2: dt.date
    approaches: tuple[str, ...]
    grids: dict
    runs: int
    policy: ThresholdPolicy
    index: str = "daily"
    out: Path = Path("out")
    seed: int = 0
    jobs: int = 1
    min_revisions: int = 20
    pairwise: bool = False
    document: dict = field(default_factory=dict, compare=False, repr=False)

    def hash(self) -> str:
        return config_hash(self.document)


def _merge(base: dict, override: dict, path="") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base and not (path == "repo." and key in ("since", "until")):
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            if path == "forecast.grids.":
                out[key] = {**base[key], **value}
            elif where == "split" and ("train" in value or "validation" in value):
                # month periods replace the default boundary dates
                extra = set(value) - {"train", "validation"}
                if extra:
                    raise ConfigError(f"split: cannot mix periods with {sorted(extra)}")
                out[key] = dict(value)
            else:
                out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def merged_document(doc: dict) -> dict:
    """``doc`` laid over the defaults; unknown keys are rejected."""
    return _merge(default_document(), doc)


def _parse_day(value, name) -> dt.date:
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError as exc:
        raise ConfigError(f"{name}: expected an ISO date, got {value!r}") from exc


def config_from_document(doc: dict) -> PipelineConfig:
    """Validate a (possibly partial) document merged over the defaults."""
    merged = merged_document(doc)
    try:
        repo = merged["repo"]
        src = RepoSource(Path(repo["root"]), tuple(repo["include"]),
                         repo.get("since") or None, repo.get("until") or None)
        split = merged["split"]
        if "train" in split or "validation" in split:
            if "train" not in split or "validation" not in split:
                raise ConfigError("split: give both 'train' and 'validation' periods")
            b1, b2 = boundaries_from_periods(split["train"], split["validation"])
        else:
            b1, b2 = _parse_day(split["b1"], "split.b1"), _parse_day(split["b2"], "split.b2")
        if b2 <= b1:
            raise ConfigError("split: b2 must be after b1")
        policy = ThresholdPolicy(**merged["policy"])
        fc = merged["forecast"]
        approaches = tuple(Kind(str(a).upper()).value for a in fc["approaches"])
        if not approaches:
            raise ConfigError("forecast.approaches must name at least one approach")
        if len(set(approaches)) != len(approaches):
            raise ConfigError("forecast.approaches contains duplicates")
        runs = int(fc["runs"])
        if runs < 1:
            raise ConfigError("forecast.runs must be >= 1")
        index = merged["index"]
        if index not in INDEX_MODES:
            raise ConfigError(f"index must be one of {INDEX_MODES}")
        if int(merged["jobs"]) < 1 or int(merged["min_revisions"]) < 1:
            raise ConfigError("jobs and min_revisions must be >= 1")
        defaults = default_document()["forecast"]["grids"]
        for kind, grid in fc["grids"].items():
            for name, values in grid.items():
                if name not in defaults[kind]:
                    raise ConfigError(f"unknown grid parameter forecast.grids.{kind}.{name}")
                if not isinstance(values, list) or not values:
                    raise ConfigError(f"forecast.grids.{kind}.{name} must be a non-empty list")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc
    return PipelineConfig(src, b1, b2, approaches, fc["grids"], runs, policy, index,
                          Path(merged["out"]), int(merged["seed"]), int(merged["jobs"]),
                          int(merged["min_revisions"]), bool(merged["compare"]["pairwise"]),
                          merged)


def load_document(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    data = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            return json.loads(data.decode("utf-8"))
        return tomllib.loads(data.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    doc = load_document(path) if path else {}
    for dotted, value in (overrides or {}).items():
        node = doc
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return config_from_document(doc)


def _canonical(doc):
    if isinstance(doc, dict):
        return {k: _canonical(v) for k, v in doc.items()}
    if isinstance(doc, (list, tuple)):
        return [_canonical(v) for v in doc]
    if isinstance(doc, (dt.date, Path)):
        return str(doc)
    return doc


def config_hash(doc: dict) -> str:
    text = json.dumps(_canonical(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def dump_document(doc: dict, fmt: str = "toml") -> str:
    doc = _canonical(doc)
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    return tomli_w.dumps(doc)
