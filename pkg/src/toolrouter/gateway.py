"""Single choke point for chat-completion and text-embedding backends.

All LLM traffic in the pipeline flows through :class:`Gateway`, which adds
retries with exponential backoff, call budgets, usage accounting, and an
optional response cache. Concrete backends live in :mod:`toolrouter.backends`.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .errors import BudgetExceeded, DimensionMismatch, GatewayError, RetriesExhausted


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 2048
    model_id: str = "default"

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("chat request needs at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be system or user")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def cache_key(self) -> str:
        payload = json.dumps(
            {
                "messages": [[m.role, m.content] for m in self.messages],
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
                "model_id": self.model_id,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def user_request(content: str, *, system: str | None = None, **kwargs) -> ChatRequest:
    messages: list[ChatMessage] = []
    if system is not None:
        messages.append(ChatMessage("system", system))
    messages.append(ChatMessage("user", content))
    return ChatRequest(messages=tuple(messages), **kwargs)


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    @property
    def dim(self) -> int:
        return len(self.values)


class TransientBackendError(GatewayError):
    """Raised by backends for failures worth retrying."""


class ChatBackend(Protocol):
    model_id: str

    def complete(self, request: ChatRequest) -> str: ...


class EmbeddingBackend(Protocol):
    model_id: str
    dim: int

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


@dataclass
class Usage:
    chat_calls: int = 0
    embed_calls: int = 0
    approx_tokens: int = 0


class Gateway:
    """Thread-safe front door for chat and embedding calls."""

    def __init__(
        self,
        chat_backend: ChatBackend | None = None,
        embedding_backend: EmbeddingBackend | None = None,
        *,
        max_retries: int = 3,
        backoff_s: float = 0.1,
        max_chat_calls: int | None = None,
        cache: bool = False,
    ) -> None:
        self._chat = chat_backend
        self._embed = embedding_backend
        self._max_retries = max_retries
        self._backoff_s = backoff_s
        self._max_chat_calls = max_chat_calls
        self._cache: dict[str, str] | None = {} if cache else None
        self._lock = threading.Lock()
        self.usage = Usage()

    def chat(self, request: ChatRequest) -> str:
        if self._chat is None:
            raise GatewayError("no chat backend configured")
        if self._cache is not None:
            key = request.cache_key()
            with self._lock:
                cached = self._cache.get(key)
            if cached is not None:
                return cached
        with self._lock:
            if self._max_chat_calls is not None and self.usage.chat_calls >= self._max_chat_calls:
                raise BudgetExceeded(f"chat call budget of {self._max_chat_calls} exhausted")
            self.usage.chat_calls += 1

        last_error: Exception | None = None
        for attempt in range(self._max_retries + 1):
            try:
                text = self._chat.complete(request)
                break
            except TransientBackendError as exc:
                last_error = exc
                if attempt < self._max_retries:
                    time.sleep(self._backoff_s * (2**attempt))
        else:
            raise RetriesExhausted(f"chat failed after {self._max_retries + 1} attempts: {last_error}")

        with self._lock:
            self.usage.approx_tokens += sum(len(m.content) for m in request.messages) // 4
            self.usage.approx_tokens += len(text) // 4
            if self._cache is not None:
                self._cache[request.cache_key()] = text
        return text

    def embed_texts(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if self._embed is None:
            raise GatewayError("no embedding backend configured")
        if not texts:
            raise ValueError("embed_texts requires at least one text")

        last_error: Exception | None = None
        for attempt in range(self._max_retries + 1):
            try:
                raw = self._embed.embed(list(texts))
                break
            except TransientBackendError as exc:
                last_error = exc
                if attempt < self._max_retries:
                    time.sleep(self._backoff_s * (2**attempt))
        else:
            raise RetriesExhausted(f"embedding failed after {self._max_retries + 1} attempts: {last_error}")

        if len(raw) != len(texts):
            raise DimensionMismatch(f"backend returned {len(raw)} vectors for {len(texts)} texts")
        dim = len(raw[0])
        vectors: list[EmbeddingVector] = []
        for values in raw:
            if len(values) != dim:
                raise DimensionMismatch(f"inconsistent embedding dims: {len(values)} vs {dim}")
            vectors.append(EmbeddingVector(values=tuple(float(v) for v in values), model_id=self._embed.model_id))
        with self._lock:
            self.usage.embed_calls += 1
        return vectors

    def embed_text(self, text: str) -> EmbeddingVector:
        return self.embed_texts([text])[0]
