"""Provider-agnostic client for chat-completion and embedding endpoints.

Two model tiers (reasoning / lightweight) behind a generic chat-completions
HTTP contract, plus a fully deterministic offline stub. All chat outputs are
schema-validated JSON; invalid responses are re-asked up to ``max_retries``
with the validation error appended.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import threading
from collections import Counter
from dataclasses import dataclass, field

import jsonschema

from .errors import ProviderUnavailable, SchemaValidationExhausted

STUB_EMBED_DIM = 256

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


@dataclass
class GatewayConfig:
    base_url: str = ""
    api_key: str = ""
    reasoning_model: str = "reasoning-default"
    lightweight_model: str = "lightweight-default"
    embedding_model: str = "embedding-default"
    stub_mode: bool = True
    timeout: float = 30.0
    max_retries: int = 2
    max_in_flight: int = 4

    @classmethod
    def from_env(cls, **overrides) -> "GatewayConfig":
        env = os.environ
        cfg = cls(
            base_url=env.get("STORYLOOM_API_BASE", ""),
            api_key=env.get("STORYLOOM_API_KEY", ""),
            reasoning_model=env.get("STORYLOOM_REASONING_MODEL", "reasoning-default"),
            lightweight_model=env.get("STORYLOOM_LIGHTWEIGHT_MODEL", "lightweight-default"),
            embedding_model=env.get("STORYLOOM_EMBEDDING_MODEL", "embedding-default"),
            stub_mode=env.get("STORYLOOM_STUB_MODE", "1") not in ("0", "false", "False"),
        )
        for k, v in overrides.items():
            setattr(cfg, k, v)
        return cfg


def extract_json(text: str):
    """Pull the first JSON value out of a model response.

    Handles fenced code blocks and prose surrounding the JSON. Raises
    ``ValueError`` when no JSON value can be found.
    """
    candidates = [m.strip() for m in _FENCE_RE.findall(text)]
    candidates.append(text.strip())
    decoder = json.JSONDecoder()
    for cand in candidates:
        try:
            return json.loads(cand)
        except ValueError:
            pass
        for i, ch in enumerate(cand):
            if ch in "{[":
                try:
                    value, _ = decoder.raw_decode(cand[i:])
                    return value
                except ValueError:
                    continue
    raise ValueError("no JSON value found in response")


def stub_embedding(text: str, dim: int = STUB_EMBED_DIM) -> list[float]:
    """Deterministic character-trigram hashing embedding, L2-normalized."""
    normalized = re.sub(r"[^a-z0-9 ]+", " ", text.lower())
    normalized = " " + re.sub(r"\s+", " ", normalized).strip() + " "
    counts = Counter()
    for i in range(max(1, len(normalized) - 2)):
        gram = normalized[i:i + 3]
        slot = int.from_bytes(hashlib.sha1(gram.encode("utf-8")).digest()[:4], "big") % dim
        counts[slot] += 1
    vec = [0.0] * dim
    for slot, c in counts.items():
        vec[slot] = float(c)
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0:
        vec[0] = 1.0
        norm = 1.0
    return [v / norm for v in vec]


def cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


@dataclass
class ChatExchange:
    tier: str
    prompt: str
    raw_response: str | None = None
    parsed: object = None
    error: str | None = None
    attempts: int = 0


class LlmGateway:
    """Chat + embedding client with deterministic stub fallback.

    In stub mode, chat answers come from (in order) a canned-response queue
    keyed by ``schema_id``, then registered responder callables; with neither
    present the call raises ``ProviderUnavailable`` so callers run their
    deterministic fallbacks.
    """

    def __init__(self, config: GatewayConfig | None = None,
                 responders: dict | None = None):
        self.config = config or GatewayConfig()
        self.responders = dict(responders or {})
        self._canned: dict[str, list] = {}
        self._gate = threading.Semaphore(self.config.max_in_flight)
        self.exchanges: list[ChatExchange] = []

    # --- stub plumbing -------------------------------------------------

    def queue_stub_response(self, schema_id: str, payload) -> None:
        self._canned.setdefault(schema_id, []).append(payload)

    def register_responder(self, schema_id: str, fn) -> None:
        self.responders[schema_id] = fn

    def _stub_chat(self, schema_id: str | None, context):
        if schema_id and self._canned.get(schema_id):
            raw = self._canned[schema_id].pop(0)
            return raw if not isinstance(raw, str) else extract_json(raw)
        if schema_id and schema_id in self.responders:
            return self.responders[schema_id](context)
        raise ProviderUnavailable(f"stub mode: no canned response or responder for {schema_id!r}")

    # --- public API ----------------------------------------------------

    def chat(self, tier: str, prompt: str, expected_schema: dict,
             schema_id: str | None = None, context=None):
        exchange = ChatExchange(tier=tier, prompt=prompt)
        self.exchanges.append(exchange)
        errors = []
        for attempt in range(self.config.max_retries + 1):
            exchange.attempts = attempt + 1
            ask = prompt if not errors else (
                prompt + "\n\nYour previous output was invalid: "
                + errors[-1] + "\nReturn only corrected JSON."
            )
            if self.config.stub_mode:
                parsed = self._stub_chat(schema_id, context)
                exchange.raw_response = json.dumps(parsed)
            else:
                raw = self._http_chat(tier, ask)
                exchange.raw_response = raw
                try:
                    parsed = extract_json(raw)
                except ValueError as exc:
                    errors.append(str(exc))
                    continue
            try:
                jsonschema.validate(parsed, expected_schema)
            except jsonschema.ValidationError as exc:
                errors.append(exc.message)
                if self.config.stub_mode and not (schema_id and self._canned.get(schema_id)):
                    # a deterministic responder will not change its answer
                    break
                continue
            exchange.parsed = parsed
            return parsed
        exchange.error = "; ".join(errors) or "schema validation failed"
        raise SchemaValidationExhausted(exchange.error)

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ProviderUnavailable("embed requires a non-empty list")
        if self.config.stub_mode:
            return [stub_embedding(t) for t in texts]
        return self._http_embed(texts)

    # --- HTTP transport --------------------------------------------------

    def _model_for(self, tier: str) -> str:
        return self.config.reasoning_model if tier == "reasoning" else self.config.lightweight_model

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        return headers

    def _http_chat(self, tier: str, prompt: str) -> str:
        import httpx

        if not self.config.base_url:
            raise ProviderUnavailable("no API base URL configured")
        body = {
            "model": self._model_for(tier),
            "messages": [{"role": "user", "content": prompt}],
        }
        with self._gate:
            try:
                resp = httpx.post(
                    self.config.base_url.rstrip("/") + "/chat/completions",
                    json=body, headers=self._headers(), timeout=self.config.timeout,
                )
                resp.raise_for_status()
            except httpx.HTTPError as exc:
                raise ProviderUnavailable(str(exc))
        return resp.json()["choices"][0]["message"]["content"]

    def _http_embed(self, texts: list[str]) -> list[list[float]]:
        import httpx

        if not self.config.base_url:
            raise ProviderUnavailable("no API base URL configured")
        body = {"model": self.config.embedding_model, "input": texts}
        with self._gate:
            try:
                resp = httpx.post(
                    self.config.base_url.rstrip("/") + "/embeddings",
                    json=body, headers=self._headers(), timeout=self.config.timeout,
                )
                resp.raise_for_status()
            except httpx.HTTPError as exc:
                raise ProviderUnavailable(str(exc))
        return [d["embedding"] for d in resp.json()["data"]]
