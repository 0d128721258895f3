"""
Experiment configuration: model dimensions and training hyper-parameters.

Defaults: 300-d embeddings, 300 GRU units per direction, 600-unit
feed-forward heads, window u=2, dropout 0.5, alpha/beta/gamma =
0.5/1.0/0.5, mini-batches of 50, Frobenius cap 3.

frobenius_cap bounds every 2-D weight matrix after each batch; the
word-embedding table is exempt.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from jointee.config import settings
from jointee.errors import ConfigError

logger = logging.getLogger(__name__)


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    embedding_dim: int = 300
    hidden_dim: int = 300          # per GRU direction; h_i has 2x this width
    ff_hidden_dim: int = 600
    window: int = 2                # u
    use_external_features: bool = True   # False drops binary and pair features
    literal_pair_indexing: bool = False
    bij_width: int = 1000
    bij_seed: int = 1
    lowercase: bool = True
    init_range: float = 0.08
    embedding_init_range: float = 0.25

    @field_validator("embedding_dim", "hidden_dim", "ff_hidden_dim", "bij_width")
    @classmethod
    def _positive_int(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("window")
    @classmethod
    def _window(cls, v: int) -> int:
        if v < 0:
            raise ValueError("window u must be >= 0")
        return v

    @field_validator("init_range", "embedding_init_range")
    @classmethod
    def _positive_float(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @classmethod
    def reduced(cls, **overrides: Any) -> "ModelConfig":
        """Small dimensions for gradient checks and fast tests."""
        values = dict(embedding_dim=8, hidden_dim=6, ff_hidden_dim=10, window=1, bij_width=16)
        values.update(overrides)
        return cls(**values)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = 0.5
    beta: float = 1.0
    gamma: float = 0.5
    batch_size: int = 50
    frobenius_cap: float = 3.0  # not applied to the embedding table
    dropout: float = 0.5
    rho: float = 0.95
    epsilon: float = 1e-6
    epochs: int = settings.DEFAULT_EPOCHS
    seed: int = settings.DEFAULT_SEED
    patience: Optional[int] = None
    unk_replace_prob: float = 0.5

    @field_validator("batch_size", "epochs")
    @classmethod
    def _positive_int(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("frobenius_cap", "rho", "epsilon")
    @classmethod
    def _positive_float(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("alpha", "beta", "gamma")
    @classmethod
    def _coefficient(cls, v: float) -> float:
        # zero is allowed so single terms can be isolated
        if v < 0:
            raise ValueError("loss coefficients must be >= 0")
        return v

    @model_validator(mode="after")
    def _ranges(self) -> "TrainConfig":
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 <= self.unk_replace_prob <= 1.0:
            raise ValueError("unk_replace_prob must be in [0, 1]")
        if self.rho >= 1.0:
            raise ValueError("rho must be < 1")
        if self.patience is not None and self.patience <= 0:
            raise ValueError("patience must be positive")
        return self


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)


# Flat CLI names -> (section, field)
OVERRIDE_FIELDS = {
    "seed": ("train", "seed"),
    "epochs": ("train", "epochs"),
    "alpha": ("train", "alpha"),
    "beta": ("train", "beta"),
    "gamma": ("train", "gamma"),
    "batch_size": ("train", "batch_size"),
    "dropout": ("train", "dropout"),
    "patience": ("train", "patience"),
    "window": ("model", "window"),
    "embedding_dim": ("model", "embedding_dim"),
    "hidden_dim": ("model", "hidden_dim"),
    "ff_hidden_dim": ("model", "ff_hidden_dim"),
}


def load_experiment_config(path: Optional[str | Path] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from an optional JSON file plus flat overrides.

    Overrides with value None are ignored, so argparse namespaces can be
    passed through directly. Boolean model switches are applied by name
    ("use_external_features", "literal_pair_indexing").
    """
    raw: dict[str, dict[str, Any]] = {"model": {}, "train": {}}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"Config file not found: {p}")
        try:
            loaded = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{p}: invalid JSON ({e})") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"{p}: top-level value must be an object")
        for section in ("model", "train"):
            raw[section].update(loaded.get(section) or {})
        unknown = set(loaded) - {"model", "train"}
        if unknown:
            raise ConfigError(f"{p}: unknown config sections {sorted(unknown)}")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in OVERRIDE_FIELDS:
            section, field = OVERRIDE_FIELDS[key]
            raw[section][field] = value
        elif key in ("use_external_features", "literal_pair_indexing"):
            raw["model"][key] = value
        else:
            raise ConfigError(f"Unknown config override: {key}")

    try:
        config = ExperimentConfig(model=ModelConfig(**raw["model"]), train=TrainConfig(**raw["train"]))
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    logger.debug(f"Resolved experiment config: {config.model_dump()}")
    return config
