"""Experiment config files: one YAML document with ``learner`` and ``sim`` sections."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .learner import LearnerConfig
from .simworld import SimConfig


class ConfigError(ValueError):
    """Config document violates the schema; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(dataclasses.replace(self.learner, seed=seed),
                                dataclasses.replace(self.sim, seed=seed))

    def to_dict(self) -> dict:
        return {"learner": dataclasses.asdict(self.learner), "sim": dataclasses.asdict(self.sim)}

    def digest(self) -> str:
        """Short stable hash of the full config, for provenance headers."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _build(cls, section: str, data) -> object:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(section, "must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{section}.{key}", "unknown field")
    kwargs = {}
    for key, value in data.items():
        default = known[key].default
        if default is not dataclasses.MISSING and isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{section}.{key}", f"expected a boolean, got {value!r}")
        elif default is not dataclasses.MISSING and isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{section}.{key}", f"expected an integer, got {value!r}")
        elif default is not dataclasses.MISSING and isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{section}.{key}", f"expected a number, got {value!r}")
            value = float(value)
        kwargs[key] = value
    if cls is LearnerConfig and "lhs_strata" in kwargs:
        strata = dict(LearnerConfig().lhs_strata)
        if not isinstance(kwargs["lhs_strata"], dict):
            raise ConfigError(f"{section}.lhs_strata", "expected a mapping of action kind to strata")
        strata.update(kwargs["lhs_strata"])
        kwargs["lhs_strata"] = strata
    try:
        return cls(**kwargs)
    except ValueError as exc:
        name = str(exc).split(" ")[0].split(".")[-1]
        raise ConfigError(f"{section}.{name}", str(exc)) from exc


def config_from_dict(doc) -> ExperimentConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a mapping")
    for key in doc:
        if key not in ("learner", "sim"):
            raise ConfigError(key, "unknown section")
    return ExperimentConfig(_build(LearnerConfig, "learner", doc.get("learner")),
                            _build(SimConfig, "sim", doc.get("sim")))


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<document>", str(exc)) from exc
    return config_from_dict(doc)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)
