"""Model bundle: sentence embedding plus per-position masked-token scoring.

Scoring is literal: one masked prediction per real token position, batched
through the model in evaluation mode. The returned value for position i is
log(softmax[t_i] + 1e-10), clamped to <= 0.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .config import SidecarConfig

_SMOOTHING = 1e-10


class ModelBundle(ABC):
    """What the HTTP layer needs from the models."""

    dim: int
    embedder_name: str
    mlm_name: str

    @abstractmethod
    def embed(self, texts: list[str]) -> list[list[float]]:
        """One unit-norm vector of length ``dim`` per text."""

    @abstractmethod
    def mlm_logprobs(self, phrase: str) -> list[float]:
        """Smoothed log-probability of each real token of the phrase."""


class RealModelBundle(ModelBundle):
    def __init__(self, config: SidecarConfig):
        import torch
        from sentence_transformers import SentenceTransformer
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self._torch = torch
        self._config = config
        self.embedder_name = config.embed_model
        self.mlm_name = config.mlm_model
        self._embedder = SentenceTransformer(config.embed_model, device=config.device)
        self.dim = int(self._embedder.get_sentence_embedding_dimension())
        self._tokenizer = AutoTokenizer.from_pretrained(config.mlm_model)
        self._mlm = AutoModelForMaskedLM.from_pretrained(config.mlm_model).to(config.device)
        self._mlm.eval()

    def embed(self, texts: list[str]) -> list[list[float]]:
        vectors = self._embedder.encode(
            texts, convert_to_numpy=True, normalize_embeddings=True, show_progress_bar=False
        ).astype(np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return (vectors / norms).tolist()

    def mlm_logprobs(self, phrase: str) -> list[float]:
        torch = self._torch
        enc = self._tokenizer(
            phrase,
            return_tensors="pt",
            truncation=True,
            max_length=self._tokenizer.model_max_length,
            return_special_tokens_mask=True,
        )
        input_ids = enc["input_ids"][0]
        special = enc["special_tokens_mask"][0]
        positions = [i for i in range(len(input_ids)) if special[i] == 0]
        if not positions:
            raise ValueError("phrase produced no scorable tokens")
        mask_id = self._tokenizer.mask_token_id
        device = self._config.device
        scores: list[float] = []
        step = self._config.mlm_forward_batch
        with torch.no_grad():
            for start in range(0, len(positions), step):
                chunk = positions[start : start + step]
                batch = input_ids.repeat(len(chunk), 1)
                for row, pos in enumerate(chunk):
                    batch[row, pos] = mask_id
                attention = torch.ones_like(batch)
                logits = self._mlm(input_ids=batch.to(device), attention_mask=attention.to(device)).logits
                for row, pos in enumerate(chunk):
                    probs = torch.softmax(logits[row, pos], dim=-1)
                    p = float(probs[input_ids[pos]])
                    scores.append(min(0.0, math.log(p + _SMOOTHING)))
        return scores
