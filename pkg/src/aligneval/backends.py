"""Uniform contract for model-backed steps.

Every pipeline talks to a Backend handle through `complete`.  The remote
backend speaks the common chat-completion JSON-over-HTTP wire format; the
scripted backend replays fixture responses keyed by prompt hash so whole
pipelines run deterministically offline.
"""

from __future__ import annotations

import abc
import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping

import httpx

from .errors import AlignEvalError, IoFailure, MalformedLine, MissingField

API_KEY_ENV = "ALIGN_API_KEY"

# base delay for jittered exponential backoff on 429/5xx/transport failures
_BACKOFF_BASE_SECONDS = 0.5


class BackendFailure(AlignEvalError):
    """Base class for completion failures."""


class Timeout(BackendFailure):
    """The endpoint did not answer within the request timeout, retries included."""


class RateLimited(BackendFailure):
    """The endpoint kept returning 429 until retries were exhausted."""


class TransportFailure(BackendFailure):
    """Connection errors, 5xx after retries, or a non-retryable HTTP error."""


class NoScriptedResponse(BackendFailure):
    """The scripted backend has no programmed response for a prompt."""


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model: str = ""
    temperature: float = 0.0
    max_output: int | None = None


@dataclass(frozen=True)
class BackendDescriptor:
    """Where completions come from.  `remote` needs an endpoint URL;
    `scripted` needs a fixture path; `echo` and `oracle` are the built-in
    deterministic rule backends."""

    kind: str
    model: str = "gpt-4o-mini"
    endpoint: str = ""
    fixture_path: str = ""
    request_timeout: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.kind not in ("remote", "scripted", "echo", "oracle"):
            raise ValueError(f"unknown backend kind: {self.kind!r}")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


class Backend(abc.ABC):
    """A completion source.  Handles are safe to share across concurrent
    callers; nothing beyond max_in_flight is serialized."""

    descriptor: BackendDescriptor

    @abc.abstractmethod
    def complete(self, request: CompletionRequest) -> str: ...


def complete(request: CompletionRequest, backend: Backend) -> str:
    if not request.prompt:
        raise ValueError("prompt must be non-empty")
    return backend.complete(request)


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ScriptedBackend(Backend):
    """Deterministic test double: responses keyed by sha256 of the prompt."""

    def __init__(
        self,
        responses: Mapping[str, str],
        descriptor: BackendDescriptor | None = None,
    ):
        self._responses = dict(responses)
        self.descriptor = descriptor or BackendDescriptor(kind="scripted")

    @classmethod
    def from_prompts(cls, responses: Mapping[str, str]) -> "ScriptedBackend":
        """Build from plain prompt -> response pairs (hashing done here)."""
        return cls({prompt_sha256(p): r for p, r in responses.items()})

    @classmethod
    def from_fixture(cls, path: str | Path, model: str = "gpt-4o-mini") -> "ScriptedBackend":
        """Load a JSONL fixture of {prompt_sha256, response} records."""
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read fixture {path}: {exc}") from exc
        responses: dict[str, str] = {}
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, str(exc)) from exc
            if "prompt_sha256" not in record:
                raise MissingField("prompt_sha256", line_no=line_no)
            if "response" not in record:
                raise MissingField("response", line_no=line_no)
            responses[record["prompt_sha256"]] = record["response"]
        descriptor = BackendDescriptor(
            kind="scripted", model=model, fixture_path=str(path)
        )
        return cls(responses, descriptor)

    def complete(self, request: CompletionRequest) -> str:
        key = prompt_sha256(request.prompt)
        if key not in self._responses:
            raise NoScriptedResponse(
                f"no scripted response for prompt hash {key} "
                f"(prompt starts: {request.prompt[:80]!r})"
            )
        return self._responses[key]


class RecordingBackend(Backend):
    """Wraps another backend and records every exchange, so a live or rule
    backend run can be frozen into a scripted fixture."""

    def __init__(self, inner: Backend):
        self._inner = inner
        self.descriptor = inner.descriptor
        self.exchanges: list[tuple[str, str]] = []

    def complete(self, request: CompletionRequest) -> str:
        response = self._inner.complete(request)
        self.exchanges.append((request.prompt, response))
        return response

    def write_fixture(self, path: str | Path) -> None:
        lines = [
            json.dumps({"prompt_sha256": prompt_sha256(prompt), "response": response})
            for prompt, response in self.exchanges
        ]
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


class RuleBackend(Backend):
    """A backend whose responses are computed by a function of the prompt.
    The built-in echo and oracle backends are instances of this."""

    def __init__(self, rule: Callable[[str], str], descriptor: BackendDescriptor):
        self._rule = rule
        self.descriptor = descriptor

    def complete(self, request: CompletionRequest) -> str:
        return self._rule(request.prompt)


class RemoteBackend(Backend):
    """HTTP client for any chat-completion-compatible endpoint.

    Retries transport errors, 429s, and 5xx responses with jittered
    exponential backoff; other HTTP errors fail immediately.  The bearer key
    is read from the ALIGN_API_KEY environment variable, never from config.
    """

    def __init__(
        self,
        descriptor: BackendDescriptor,
        transport: httpx.BaseTransport | None = None,
    ):
        if not descriptor.endpoint:
            raise ValueError("remote backend requires an endpoint URL")
        self.descriptor = descriptor
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=descriptor.endpoint.rstrip("/"),
            headers=headers,
            timeout=descriptor.request_timeout,
            transport=transport,
        )
        self._slots = threading.BoundedSemaphore(descriptor.max_in_flight)
        self._jitter = random.Random()

    def complete(self, request: CompletionRequest) -> str:
        body: dict = {
            "model": request.model or self.descriptor.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        }
        if request.max_output is not None:
            body["max_tokens"] = request.max_output

        attempts = self.descriptor.max_retries + 1
        failure: BackendFailure = TransportFailure("no attempt made")
        for attempt in range(attempts):
            if attempt:
                delay = _BACKOFF_BASE_SECONDS * 2 ** (attempt - 1)
                time.sleep(delay * (1.0 + self._jitter.random()))
            try:
                with self._slots:
                    response = self._client.post("/chat/completions", json=body)
            except httpx.TimeoutException as exc:
                failure = Timeout(f"request timed out: {exc}")
                continue
            except httpx.HTTPError as exc:
                failure = TransportFailure(f"transport error: {exc}")
                continue
            if response.status_code == 429:
                failure = RateLimited(f"rate limited: {response.text[:200]}")
                continue
            if response.status_code >= 500:
                failure = TransportFailure(
                    f"server error {response.status_code}: {response.text[:200]}"
                )
                continue
            if response.status_code >= 400:
                raise TransportFailure(
                    f"HTTP {response.status_code}: {response.text[:200]}"
                )
            return self._extract_text(response)
        raise failure

    @staticmethod
    def _extract_text(response: httpx.Response) -> str:
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise TransportFailure(f"unexpected response shape: {exc}") from exc

    def close(self) -> None:
        self._client.close()


def parse_backend_spec(
    spec: str,
    model: str = "gpt-4o-mini",
    request_timeout: float = 60.0,
    max_retries: int = 3,
    max_in_flight: int = 4,
) -> BackendDescriptor:
    """Parse a CLI backend spec: a URL, `scripted:<fixture path>`, `echo`,
    or `oracle`."""
    base = BackendDescriptor(
        kind="echo",
        model=model,
        request_timeout=request_timeout,
        max_retries=max_retries,
        max_in_flight=max_in_flight,
    )
    if spec == "echo" or spec == "oracle":
        return replace(base, kind=spec)
    if spec.startswith("scripted:"):
        return replace(base, kind="scripted", fixture_path=spec.split(":", 1)[1])
    if spec.startswith("http://") or spec.startswith("https://"):
        return replace(base, kind="remote", endpoint=spec)
    raise ValueError(
        f"backend spec must be a URL, scripted:<fixture>, echo, or oracle: {spec!r}"
    )


def make_backend(descriptor: BackendDescriptor) -> Backend:
    if descriptor.kind == "scripted":
        return ScriptedBackend.from_fixture(descriptor.fixture_path, descriptor.model)
    if descriptor.kind == "remote":
        return RemoteBackend(descriptor)
    # echo and oracle live in .synthetic; imported lazily to avoid a cycle
    from . import synthetic

    if descriptor.kind == "echo":
        return synthetic.echo_backend(descriptor)
    return synthetic.oracle_backend(descriptor)
