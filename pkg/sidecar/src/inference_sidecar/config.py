"""Service configuration: JSON config file, overridden by environment variables."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

DEFAULT_EMBED_MODEL = "sentence-transformers/all-MiniLM-L6-v2"
DEFAULT_MLM_MODEL = "allenai/scibert_scivocab_uncased"

ENV_PREFIX = "SIDECAR_"


@dataclass(frozen=True)
class SidecarConfig:
    embed_model: str = DEFAULT_EMBED_MODEL
    mlm_model: str = DEFAULT_MLM_MODEL
    host: str = "127.0.0.1"
    port: int = 8800
    device: str = "cpu"
    max_batch: int = 64
    max_text_chars: int = 8000
    mlm_forward_batch: int = 32


def load_config(path: str | Path | None = None) -> SidecarConfig:
    """Defaults <- optional JSON file (or $SIDECAR_CONFIG) <- environment."""
    values: dict = {}
    config_path = path or os.environ.get(ENV_PREFIX + "CONFIG")
    if config_path:
        values.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
    for field, cast in (
        ("embed_model", str),
        ("mlm_model", str),
        ("host", str),
        ("port", int),
        ("device", str),
        ("max_batch", int),
        ("max_text_chars", int),
        ("mlm_forward_batch", int),
    ):
        raw = os.environ.get(ENV_PREFIX + field.upper())
        if raw is not None:
            values[field] = cast(raw)
    return SidecarConfig(**values)
