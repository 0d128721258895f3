"""
Checkpoint container.

A zip archive holding metadata.json (format version, label schema,
vocabulary, feature-encoder maps, configs) and one .npy member per
parameter. Member timestamps are fixed so equal models give equal bytes.
"""
from __future__ import annotations

import io
import json
import logging
import zipfile
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from jointee.config import ExperimentConfig, ModelConfig, TrainConfig
from jointee.config import settings
from jointee.errors import CheckpointError, SchemaMismatchError
from jointee.event_extractor import BijFeatures
from jointee.features import BinaryFeatureEncoder, EmbeddingTable, Vocabulary
from jointee.models import LabelSchema
from jointee.network import EMBEDDING_PARAM, JointModel

logger = logging.getLogger(__name__)

METADATA = "metadata.json"
FIXED_TIME = (1980, 1, 1, 0, 0, 0)


def _member(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=FIXED_TIME)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    return info


def _param_member(name: str) -> str:
    return f"params/{name}.npy"


def save_checkpoint(path: str | Path, model: JointModel, config: Optional[ExperimentConfig] = None) -> Path:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    metadata = {
        "format": settings.CHECKPOINT_FORMAT,
        "schema": model.schema.to_dict(),
        "vocabulary": model.tables.vocab.to_dict(),
        "binary_features": model.tables.binary.to_dict(),
        "bij": model.events.bij.to_dict(),
        "model_config": model.config.model_dump(),
        "train_config": config.train.model_dump() if config is not None else None,
        "parameters": {name: list(t.shape) for name, t in model.store.items()},
    }
    with zipfile.ZipFile(p, "w") as zf:
        zf.writestr(_member(METADATA), json.dumps(metadata, sort_keys=True, indent=2))
        for name, tensor in model.store.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(tensor.values), allow_pickle=False)
            zf.writestr(_member(_param_member(name)), buf.getvalue())
    logger.info(f"Wrote checkpoint with {len(model.store)} parameter arrays to {p}")
    return p


def load_checkpoint(path: str | Path) -> tuple[JointModel, ExperimentConfig]:
    """Rebuild the model (and the config it was trained with) from a checkpoint."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Checkpoint not found: {p}")
    try:
        with zipfile.ZipFile(p, "r") as zf:
            metadata = json.loads(zf.read(METADATA).decode("utf-8"))
            if metadata.get("format") != settings.CHECKPOINT_FORMAT:
                raise CheckpointError(
                    f"{p}: checkpoint format {metadata.get('format')} is not supported "
                    f"(expected {settings.CHECKPOINT_FORMAT})"
                )
            arrays = {
                name: np.lib.format.read_array(io.BytesIO(zf.read(_param_member(name))), allow_pickle=False)
                for name in metadata["parameters"]
            }
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError, ValueError) as e:
        raise CheckpointError(f"{p}: unreadable checkpoint ({e})") from e

    try:
        model_config = ModelConfig(**metadata["model_config"])
        train_config = TrainConfig(**metadata["train_config"]) if metadata.get("train_config") else TrainConfig()
    except ValidationError as e:
        raise CheckpointError(f"{p}: invalid stored config ({e})") from e
    try:
        schema = LabelSchema.from_dict(metadata["schema"])
    except SchemaMismatchError as e:
        raise CheckpointError(f"{p}: invalid stored schema ({e})") from e

    vocab = Vocabulary.from_dict(metadata["vocabulary"])
    binary = BinaryFeatureEncoder.from_dict(metadata["binary_features"])
    embeddings = EmbeddingTable(arrays[EMBEDDING_PARAM].copy())
    model = JointModel(schema, vocab, binary, model_config, np.random.default_rng(0), embeddings)
    model.events.bij = BijFeatures.from_dict(metadata["bij"])
    try:
        model.store.load_state(arrays)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"{p}: parameters do not fit the stored architecture ({e})") from e
    logger.info(f"Loaded checkpoint {p} ({model.store.count()} parameters)")
    return model, ExperimentConfig(model=model_config, train=train_config)
