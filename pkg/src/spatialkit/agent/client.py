"""Chat-completion clients: HTTPS with retry/backoff, and a replayable mock.

The mock client replays fixture responses keyed by a digest of the request,
so agent tests and benchmark runs are fully deterministic.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import AuthError, TransportError

ENV_API_KEY = "SPATIALKIT_API_KEY"
ENV_BASE_URL = "SPATIALKIT_BASE_URL"

BACKOFF_BASE = 1.0
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 5


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system: str
    texts: tuple  # ordered user text parts
    images: tuple  # ordered PNG-encoded image byte strings
    temperature: float = 0.0
    max_tokens: int = 2048

    def digest(self):
        payload = {
            "model": self.model,
            "system": self.system,
            "texts": list(self.texts),
            "images": [hashlib.sha256(b).hexdigest() for b in self.images],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency: float = 0.0

    def __post_init__(self):
        if self.latency < 0:
            raise ValueError("latency must be non-negative")


class ChatClient:
    """Client contract: send(request) -> response; raises TransportError."""

    image_limit = 32

    def send(self, request):
        raise NotImplementedError

    def check_limits(self, request):
        if len(request.images) > self.image_limit:
            raise ValueError(
                f"request attaches {len(request.images)} images, client "
                f"limit is {self.image_limit}")


class HttpChatClient(ChatClient):
    """OpenAI-style chat completions over HTTPS with exponential backoff.

    Credential and base URL come from configuration, overridable through
    the SPATIALKIT_API_KEY / SPATIALKIT_BASE_URL environment variables.
    Rate-limit and server-error statuses retry up to MAX_ATTEMPTS with
    backoff 1s, 2s, 4s, ...; auth failures never retry.
    """

    def __init__(self, base_url=None, api_key=None, timeout=120.0, sleep=time.sleep):
        self.base_url = os.environ.get(ENV_BASE_URL, base_url)
        self.api_key = os.environ.get(ENV_API_KEY, api_key)
        if not self.base_url:
            raise ValueError("no base URL configured")
        self.timeout = timeout
        self._sleep = sleep

    def _body(self, request):
        content = [{"type": "text", "text": t} for t in request.texts]
        for png in request.images:
            b64 = base64.b64encode(png).decode("ascii")
            content.append({
                "type": "image_url",
                "image_url": {"url": f"data:image/png;base64,{b64}"},
            })
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.append({"role": "user", "content": content})
        return {
            "model": request.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

    def send(self, request):
        import requests

        self.check_limits(request)
        url = self.base_url.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last_status = None
        start = time.monotonic()
        for attempt in range(MAX_ATTEMPTS):
            try:
                resp = requests.post(url, json=self._body(request),
                                     headers=headers, timeout=self.timeout)
            except requests.RequestException as e:
                raise TransportError(f"chat request failed: {e}") from e
            last_status = resp.status_code
            if resp.status_code in (401, 403):
                raise AuthError(f"credential rejected (status {resp.status_code})",
                                last_status=resp.status_code)
            if resp.status_code == 429 or resp.status_code >= 500:
                if attempt + 1 < MAX_ATTEMPTS:
                    self._sleep(BACKOFF_BASE * BACKOFF_FACTOR ** attempt)
                continue
            if resp.status_code != 200:
                raise TransportError(
                    f"chat request returned status {resp.status_code}",
                    last_status=resp.status_code)
            data = resp.json()
            usage = data.get("usage", {})
            return ChatResponse(
                text=data["choices"][0]["message"]["content"],
                prompt_tokens=usage.get("prompt_tokens", 0),
                completion_tokens=usage.get("completion_tokens", 0),
                latency=time.monotonic() - start,
            )
        raise TransportError(
            f"chat request failed after {MAX_ATTEMPTS} attempts "
            f"(last status {last_status})", last_status=last_status)


class MockChatClient(ChatClient):
    """Replays fixture responses keyed by request digest.

    Fixture files are line-delimited JSON of {"digest": ..., "response_text": ...}.
    """

    def __init__(self, fixtures=None):
        self.responses = {}
        if fixtures is not None:
            self.load(fixtures)
        self.requests_seen = []

    def load(self, path):
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            self.responses[rec["digest"]] = rec["response_text"]

    def add(self, digest, response_text):
        self.responses[digest] = response_text

    def send(self, request):
        self.check_limits(request)
        self.requests_seen.append(request)
        digest = request.digest()
        if digest not in self.responses:
            raise TransportError(f"no fixture response for digest {digest}")
        return ChatResponse(text=self.responses[digest])


class ScriptedChatClient(ChatClient):
    """Returns canned responses in order; handy for scripting retry tests."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests_seen = []

    def send(self, request):
        self.check_limits(request)
        self.requests_seen.append(request)
        if not self.responses:
            raise TransportError("scripted client ran out of responses")
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return ChatResponse(text=item)


class RecordingChatClient(ChatClient):
    """Wraps another client and writes digest-keyed fixtures as it goes."""

    def __init__(self, inner, fixture_path):
        self.inner = inner
        self.fixture_path = Path(fixture_path)

    def send(self, request):
        response = self.inner.send(request)
        with self.fixture_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps({
                "digest": request.digest(),
                "response_text": response.text,
            }) + "\n")
        return response
