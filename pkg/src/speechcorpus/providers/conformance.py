"""Protocol conformance suite for provider servers.

Any server implementing the provider wire protocol (the inference adapter,
stub or real models) should pass ``run_conformance(base_url)``. Checks are
contract-level: schemas, invariants, and the 503/Retry-After overload
behavior — never model quality.
"""

from __future__ import annotations

import base64
import concurrent.futures
from dataclasses import dataclass
from typing import List, Optional

import httpx
import jsonschema
import numpy as np

from ..model import AudioBuffer
from .wire import encode_audio, load_schema

_TEST_RATE = 16_000


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _test_audio(duration_s: float = 1.2) -> dict:
    t = np.arange(int(_TEST_RATE * duration_s)) / _TEST_RATE
    tone = 0.4 * np.sin(2 * np.pi * 440.0 * t)
    return encode_audio(AudioBuffer(samples=tone, sample_rate_hz=_TEST_RATE))


def _validate(instance, schema_name: str) -> None:
    jsonschema.validate(instance=instance, schema=load_schema(schema_name))


def run_conformance(
    base_url: str,
    timeout_s: float = 30.0,
    overload_requests: int = 0,
) -> List[CheckResult]:
    """Run every check against a live server; set overload_requests > 0 to
    also probe the 503/Retry-After behavior with that many parallel calls."""
    results: List[CheckResult] = []
    with httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout_s) as client:

        def check(name, fn):
            try:
                fn(client)
                results.append(CheckResult(name, True))
            except Exception as exc:  # noqa: BLE001 - report, don't crash the suite
                results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))

        check("health", _check_health)
        check("transcribe", _check_transcribe)
        check("completeness", _check_completeness)
        check("embed", _check_embed)
        check("music", _check_music)
        check("punctuate", _check_punctuate)
        if overload_requests > 0:
            check("overload_503", lambda c: _check_overload(c, overload_requests))
    return results


def assert_conformant(base_url: str, overload_requests: int = 0) -> List[CheckResult]:
    results = run_conformance(base_url, overload_requests=overload_requests)
    failures = [r for r in results if not r.passed]
    if failures:
        lines = "\n".join(f"  {r.name}: {r.detail}" for r in failures)
        raise AssertionError(f"provider conformance failures:\n{lines}")
    return results


def _post_ok(client: httpx.Client, endpoint: str, payload: dict) -> dict:
    response = client.post(f"/{endpoint}", json=payload)
    if response.status_code == 503:
        retry_after = response.headers.get("Retry-After")
        assert retry_after is not None, "503 without Retry-After header"
        response = client.post(f"/{endpoint}", json=payload)
    assert response.status_code == 200, f"HTTP {response.status_code}: {response.text[:200]}"
    return response.json()


def _check_health(client: httpx.Client) -> None:
    response = client.get("/health")
    assert response.status_code == 200, f"HTTP {response.status_code}"
    body = response.json()
    _validate(body, "health_response")


def _check_transcribe(client: httpx.Client) -> None:
    body = _post_ok(client, "transcribe", _test_audio())
    _validate(body, "transcribe_response")


def _check_completeness(client: httpx.Client) -> None:
    body = _post_ok(client, "completeness", {"text": "This sentence is finished."})
    _validate(body, "completeness_response")
    assert body["is_complete"] == (body["score"] >= 0.5), "is_complete inconsistent with score"
    assert body["is_complete"], "terminated sentence judged incomplete"
    empty = _post_ok(client, "completeness", {"text": ""})
    _validate(empty, "completeness_response")
    assert not empty["is_complete"], "empty text judged complete"


def _check_embed(client: httpx.Client) -> None:
    first = _post_ok(client, "embed", _test_audio())
    _validate(first, "embed_response")
    norm = float(np.linalg.norm(first["vector"]))
    assert norm > 0, "zero-norm embedding"
    second = _post_ok(client, "embed", _test_audio(duration_s=1.5))
    assert len(second["vector"]) == len(first["vector"]), "embedding dimension not constant"


def _check_music(client: httpx.Client) -> None:
    duration = 1.2
    body = _post_ok(client, "music", _test_audio(duration))
    _validate(body, "music_response")
    for span in body["spans"]:
        assert span["end_s"] > span["start_s"], "empty music span"
        assert span["end_s"] <= duration + 1e-6, "music span outside audio"


def _check_punctuate(client: httpx.Client) -> None:
    body = _post_ok(client, "punctuate", {"text": "hello there"})
    _validate(body, "punctuate_response")
    once = body["text"]
    assert once.rstrip()[-1:] in ".!?؟۔؛…", "no terminal punctuation after restore"
    twice = _post_ok(client, "punctuate", {"text": once})["text"]
    assert twice == once, "restore_punctuation is not idempotent"


def _check_overload(client: httpx.Client, n_requests: int) -> None:
    payload = {"text": "overload probe"}

    def fire(_):
        return client.post("/completeness", json=payload)

    with concurrent.futures.ThreadPoolExecutor(max_workers=n_requests) as pool:
        responses = list(pool.map(fire, range(n_requests)))
    saw_503 = False
    for response in responses:
        assert response.status_code in (200, 503), f"unexpected HTTP {response.status_code}"
        if response.status_code == 503:
            saw_503 = True
            assert response.headers.get("Retry-After") is not None, "503 without Retry-After"
    assert saw_503, "server never returned 503 under overload"
