"""HTTP surface: /v1/embed, /v1/mlm_scores, /v1/health.

Request and response cardinalities always match; vectors are unit-normalized
server-side; malformed bodies return 400, oversized batches 413, and both
model endpoints return 503 until the bundle has loaded.
"""

from __future__ import annotations

import threading
from collections.abc import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .bundle import ModelBundle
from .config import SidecarConfig


class EmbedRequest(BaseModel):
    texts: list[str]


class MlmScoreRequest(BaseModel):
    phrases: list[str]
    # Reserved for sentence-extended scoring; rejected until implemented.
    contexts: list[str] | None = Field(default=None)


def create_app(
    config: SidecarConfig,
    bundle_loader: Callable[[], ModelBundle] | None = None,
    bundle: ModelBundle | None = None,
) -> FastAPI:
    """Build the service; pass ``bundle`` directly in tests, a loader in production."""
    app = FastAPI(title="inference-sidecar", version="0.1.0")
    state = {"bundle": bundle, "error": None}
    lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def malformed(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": f"malformed request: {exc.errors()[:3]}"})

    def load_in_background():
        try:
            loaded = bundle_loader()
            with lock:
                state["bundle"] = loaded
        except Exception as exc:
            with lock:
                state["error"] = f"{type(exc).__name__}: {exc}"

    if bundle is None and bundle_loader is not None:
        threading.Thread(target=load_in_background, daemon=True).start()

    def current_bundle() -> ModelBundle | None:
        with lock:
            return state["bundle"]

    def unavailable() -> JSONResponse:
        with lock:
            detail = state["error"] or "models are still loading"
        return JSONResponse(status_code=503, content={"error": detail})

    def batch_error(items: list[str], cap_label: str) -> JSONResponse | None:
        if not items:
            return JSONResponse(status_code=400, content={"error": f"{cap_label} list is empty"})
        if len(items) > config.max_batch:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {len(items)} exceeds cap {config.max_batch}"},
            )
        for i, item in enumerate(items):
            if not item.strip():
                return JSONResponse(status_code=400, content={"error": f"{cap_label}[{i}] is empty"})
            if len(item) > config.max_text_chars:
                return JSONResponse(
                    status_code=413,
                    content={"error": f"{cap_label}[{i}] has {len(item)} chars, cap {config.max_text_chars}"},
                )
        return None

    @app.post("/v1/embed")
    def embed(request: EmbedRequest):
        model = current_bundle()
        if model is None:
            return unavailable()
        error = batch_error(request.texts, "texts")
        if error is not None:
            return error
        vectors = model.embed(request.texts)
        return {"dim": model.dim, "vectors": vectors}

    @app.post("/v1/mlm_scores")
    def mlm_scores(request: MlmScoreRequest):
        model = current_bundle()
        if model is None:
            return unavailable()
        if request.contexts is not None:
            return JSONResponse(
                status_code=400,
                content={"error": "context-extended scoring is reserved and not implemented"},
            )
        error = batch_error(request.phrases, "phrases")
        if error is not None:
            return error
        results = []
        for phrase in request.phrases:
            try:
                logprobs = model.mlm_logprobs(phrase)
            except ValueError as exc:
                return JSONResponse(status_code=400, content={"error": f"{phrase!r}: {exc}"})
            results.append({"token_logprobs": logprobs, "token_count": len(logprobs)})
        return {"results": results}

    @app.get("/v1/health")
    def health():
        model = current_bundle()
        if model is None:
            return unavailable()
        return {
            "status": "ok",
            "models": {"embedder": model.embedder_name, "mlm": model.mlm_name},
            "dim": model.dim,
        }

    return app
