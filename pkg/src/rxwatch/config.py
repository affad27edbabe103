"""Pipeline configuration: an INI-style file (key = value under section
headers) with every key overridable from the command line.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .btm import DEFAULT_BETA, DEFAULT_ITERATIONS, DEFAULT_TOPIC_CAP
from .corpus import DEFAULT_DRUG_NAMES
from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    # [input]
    raw_paths: tuple[str, ...] = ()
    schema_mode: str = "lenient"
    # [keywords]
    drugs: tuple[str, ...] = tuple(sorted(DEFAULT_DRUG_NAMES))
    match_mode: str = "token"
    # [tokenizer]
    stopwords_path: str | None = None
    # [btm]
    k: int | None = None  # None = choose from sparsity
    topic_cap: int = DEFAULT_TOPIC_CAP
    alpha: float | None = None  # None = 50/k
    beta: float = DEFAULT_BETA
    iterations: int = DEFAULT_ITERATIONS
    btm_seed: int = 7
    window: int | None = None
    # [isolation]
    rogue_topics: tuple[int, ...] | None = None  # None = derive from the store
    store_path: str = "annotations.jsonl"
    # [classifier]
    l2_lambda: float = 1.0
    split_fraction: float = 0.7
    runs: int = 10
    classifier_seed: int = 11
    # [service]
    bind_host: str = "127.0.0.1"
    bind_port: int = 8787
    static_dir: str | None = None
    # [output]
    output_dir: str = "out"


_SECTIONS = {
    "input": {"raw": "raw_paths", "schema_mode": "schema_mode"},
    "keywords": {"drugs": "drugs", "match_mode": "match_mode"},
    "tokenizer": {"stopwords": "stopwords_path"},
    "btm": {
        "k": "k",
        "cap": "topic_cap",
        "alpha": "alpha",
        "beta": "beta",
        "iterations": "iterations",
        "seed": "btm_seed",
        "window": "window",
    },
    "isolation": {"rogue_topics": "rogue_topics", "store": "store_path"},
    "classifier": {
        "l2_lambda": "l2_lambda",
        "split_fraction": "split_fraction",
        "runs": "runs",
        "seed": "classifier_seed",
    },
    "service": {"host": "bind_host", "port": "bind_port", "static_dir": "static_dir"},
    "output": {"dir": "output_dir"},
}

_INT_FIELDS = {"k", "topic_cap", "iterations", "btm_seed", "window", "runs", "classifier_seed", "bind_port"}
_FLOAT_FIELDS = {"alpha", "beta", "l2_lambda", "split_fraction"}
_AUTO_NONE = {"k", "alpha", "window", "rogue_topics"}  # 'auto' means derive


def _parse_value(field_name: str, raw: str, problems: list[str]):
    raw = raw.strip()
    if field_name in _AUTO_NONE and raw.lower() in ("auto", "none", ""):
        return None
    if field_name == "raw_paths":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if field_name == "drugs":
        return tuple(sorted({part.strip().lower() for part in raw.split(",") if part.strip()}))
    if field_name == "rogue_topics":
        try:
            return tuple(int(part) for part in raw.split(",") if part.strip())
        except ValueError:
            problems.append(f"rogue_topics: expected comma-separated integers, got {raw!r}")
            return None
    if field_name in _INT_FIELDS:
        try:
            return int(raw)
        except ValueError:
            problems.append(f"{field_name}: expected integer, got {raw!r}")
            return None
    if field_name in _FLOAT_FIELDS:
        try:
            return float(raw)
        except ValueError:
            problems.append(f"{field_name}: expected number, got {raw!r}")
            return None
    if field_name in ("stopwords_path", "static_dir"):
        return raw or None
    return raw


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    """Read the config file (if any) then apply key=value overrides.

    Overrides use section.key names, e.g. {'btm.seed': '3'}.
    """
    problems: list[str] = []
    values: dict[str, object] = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        read = parser.read(path)
        if not read:
            raise ConfigError([f"config file not found: {path}"])
        for section in parser.sections():
            if section not in _SECTIONS:
                problems.append(f"unknown config section [{section}]")
                continue
            for key, raw in parser.items(section):
                if key not in _SECTIONS[section]:
                    problems.append(f"unknown key '{key}' in section [{section}]")
                    continue
                field_name = _SECTIONS[section][key]
                values[field_name] = _parse_value(field_name, raw, problems)
    for dotted, raw in (overrides or {}).items():
        if "." not in dotted:
            problems.append(f"override must be section.key, got {dotted!r}")
            continue
        section, key = dotted.split(".", 1)
        if section not in _SECTIONS or key not in _SECTIONS[section]:
            problems.append(f"unknown override {dotted!r}")
            continue
        field_name = _SECTIONS[section][key]
        values[field_name] = _parse_value(field_name, raw, problems)
    if problems:
        raise ConfigError(problems)
    config = PipelineConfig(**values)
    validate_config(config)
    return config


def validate_config(config: PipelineConfig) -> None:
    problems: list[str] = []
    if config.schema_mode not in ("strict", "lenient"):
        problems.append(f"input.schema_mode: must be strict or lenient, got {config.schema_mode!r}")
    if config.match_mode not in ("token", "substring"):
        problems.append(f"keywords.match_mode: must be token or substring, got {config.match_mode!r}")
    if not config.drugs:
        problems.append("keywords.drugs: must list at least one keyword")
    if config.k is not None and config.k < 2:
        problems.append(f"btm.k: must be >= 2, got {config.k}")
    if config.topic_cap < 2:
        problems.append(f"btm.cap: must be >= 2, got {config.topic_cap}")
    if config.alpha is not None and config.alpha <= 0:
        problems.append(f"btm.alpha: must be positive, got {config.alpha}")
    if config.beta <= 0:
        problems.append(f"btm.beta: must be positive, got {config.beta}")
    if config.iterations < 1:
        problems.append(f"btm.iterations: must be >= 1, got {config.iterations}")
    if config.window is not None and config.window < 2:
        problems.append(f"btm.window: must be >= 2, got {config.window}")
    if config.l2_lambda < 0:
        problems.append(f"classifier.l2_lambda: must be >= 0, got {config.l2_lambda}")
    if not 0.0 < config.split_fraction < 1.0:
        problems.append(f"classifier.split_fraction: must be in (0,1), got {config.split_fraction}")
    if config.runs < 1:
        problems.append(f"classifier.runs: must be >= 1, got {config.runs}")
    if not 1 <= config.bind_port <= 65535:
        problems.append(f"service.port: must be a port number, got {config.bind_port}")
    for raw in config.raw_paths:
        if not Path(raw).exists():
            problems.append(f"input.raw: path does not exist: {raw}")
    if config.stopwords_path is not None and not Path(config.stopwords_path).exists():
        problems.append(f"tokenizer.stopwords: path does not exist: {config.stopwords_path}")
    if problems:
        raise ConfigError(problems)


def canonical_dump(config: PipelineConfig) -> str:
    """Stable key = value rendering used for hashing and manifests."""
    lines = []
    for f in sorted(fields(config), key=lambda f: f.name):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines)


def config_hash(config: PipelineConfig) -> str:
    return hashlib.sha256(canonical_dump(config).encode("utf-8")).hexdigest()
