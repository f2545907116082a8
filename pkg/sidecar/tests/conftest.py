from __future__ import annotations

import math
import socket
from hashlib import blake2b

import numpy as np
import pytest

from inference_sidecar.bundle import ModelBundle
from inference_sidecar.config import SidecarConfig


class StubBundle(ModelBundle):
    """Deterministic tiny stand-in used to test the HTTP layer in isolation."""

    def __init__(self, dim: int = 8):
        self.dim = dim
        self.embedder_name = "stub-embedder"
        self.mlm_name = "stub-mlm"

    def embed(self, texts):
        out = []
        for text in texts:
            digest = blake2b(text.encode("utf-8"), digest_size=self.dim).digest()
            vec = np.array([b - 127.5 for b in digest], dtype=np.float64)
            out.append((vec / np.linalg.norm(vec)).tolist())
        return out

    def mlm_logprobs(self, phrase):
        tokens = phrase.split()
        if not tokens:
            raise ValueError("no tokens")
        return [min(0.0, math.log(1.0 / (i + 2) + 1e-10)) for i in range(len(tokens))]


@pytest.fixture()
def stub_config():
    return SidecarConfig(max_batch=4, max_text_chars=50)


@pytest.fixture()
def client(stub_config):
    from fastapi.testclient import TestClient

    from inference_sidecar.app import create_app

    app = create_app(stub_config, bundle=StubBundle())
    return TestClient(app)


def _models_reachable() -> bool:
    try:
        socket.getaddrinfo("huggingface.co", 443)
        return True
    except OSError:
        pass
    try:
        from transformers import AutoConfig

        AutoConfig.from_pretrained(SidecarConfig().mlm_model, local_files_only=True)
        return True
    except Exception:
        return False


_AVAILABLE = None


def models_available() -> bool:
    global _AVAILABLE
    if _AVAILABLE is None:
        _AVAILABLE = _models_reachable()
    return _AVAILABLE


requires_models = pytest.mark.skipif(
    not models_available(),
    reason="model weights unavailable: no Hugging Face access and no local cache",
)


@pytest.fixture(scope="session")
def real_bundle():
    if not models_available():
        pytest.skip("model weights unavailable")
    from inference_sidecar.bundle import RealModelBundle

    return RealModelBundle(SidecarConfig())
