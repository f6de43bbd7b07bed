"""FastAPI application implementing the provider wire protocol.

Endpoints are deliberately synchronous: each request holds one slot of a
bounded semaphore for its full duration, and a request that cannot get a
slot immediately is answered with 503 + Retry-After so callers back off
instead of queueing behind a saturated model.
"""

from __future__ import annotations

import base64
import threading
import time

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from . import __version__
from .config import CAPABILITIES, AdapterConfig
from .models import load_model

RETRY_AFTER_S = 1


class AudioRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    audio: str
    sample_rate: int


class TextRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    text: str


def _decode_pcm(request: AudioRequest) -> np.ndarray:
    raw = base64.b64decode(request.audio)
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0


def create_app(config: AdapterConfig | None = None) -> FastAPI:
    config = config or AdapterConfig()
    app = FastAPI(title="speechcorpus inference adapter", version=__version__)

    models = {
        cap: load_model(cap, config.models.get(cap, "stub"), config.device)
        for cap in CAPABILITIES
    }
    slots = threading.BoundedSemaphore(config.max_concurrent)

    def guarded(capability: str, handler):
        if models[capability] is None:
            return JSONResponse(
                status_code=501,
                content={"error": f"model for {capability!r} failed to load"},
            )
        if not slots.acquire(blocking=False):
            return JSONResponse(
                status_code=503,
                content={"error": "server at capacity"},
                headers={"Retry-After": str(RETRY_AFTER_S)},
            )
        try:
            if config.min_request_s > 0:
                time.sleep(config.min_request_s)
            return handler(models[capability])
        finally:
            slots.release()

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "version": __version__,
            "capabilities": [cap for cap in CAPABILITIES if models[cap] is not None],
        }

    @app.post("/transcribe")
    def transcribe(request: AudioRequest):
        pcm = _decode_pcm(request)

        def run(model):
            text, confidence = model.transcribe(pcm, request.sample_rate)
            return {"text": text, "confidence": confidence}

        return guarded("transcribe", run)

    @app.post("/completeness")
    def completeness(request: TextRequest):
        def run(model):
            is_complete, score = model.check(request.text)
            return {"is_complete": is_complete, "score": score}

        return guarded("completeness", run)

    @app.post("/embed")
    def embed(request: AudioRequest):
        pcm = _decode_pcm(request)

        def run(model):
            return {"vector": model.embed(pcm, request.sample_rate)}

        return guarded("embed", run)

    @app.post("/music")
    def music(request: AudioRequest):
        pcm = _decode_pcm(request)

        def run(model):
            return {"spans": model.detect(pcm, request.sample_rate)}

        return guarded("music", run)

    @app.post("/punctuate")
    def punctuate(request: TextRequest):
        def run(model):
            return {"text": model.restore(request.text)}

        return guarded("punctuate", run)

    return app
