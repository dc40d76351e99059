"""OpenAI-compatible chat-completions backend.

Works against any endpoint speaking the /v1/chat/completions wire
format (hosted APIs, Ollama, vLLM). Transient failures are retried
with exponential backoff; auth failures are terminal on sight.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import httpx

from .contracts import ChatRequest
from .errors import AuthError, DomainError, MalformedResponse, NetworkError, RateLimited

log = logging.getLogger(__name__)

ENV_BASE_URL = "FAIRDECODE_API_BASE"
ENV_API_KEY = "FAIRDECODE_API_KEY"
ENV_MODEL = "FAIRDECODE_MODEL"

DEFAULT_BASE_URL = "http://localhost:11434"

BACKOFF_BASE_SECONDS = 0.5
BACKOFF_CAP_SECONDS = 8.0


@dataclass(frozen=True)
class BackendConfig:
    base_url: str
    api_key: str
    model_name: str
    temperature: float | None = None
    request_timeout: float = 60.0
    max_retries: int = 3

    def __post_init__(self):
        if self.max_retries < 0:
            raise DomainError(f"max_retries must be >= 0: {self.max_retries}")
        if self.request_timeout <= 0:
            raise DomainError(f"request_timeout must be > 0: {self.request_timeout}")
        if self.temperature is not None and self.temperature < 0:
            raise DomainError(f"temperature must be >= 0: {self.temperature}")

    @classmethod
    def from_env(
        cls,
        model_name: str | None = None,
        base_url: str | None = None,
        api_key: str | None = None,
        **kwargs,
    ) -> "BackendConfig":
        """Build a config from flags with environment fallbacks."""
        base = base_url or os.environ.get(ENV_BASE_URL) or DEFAULT_BASE_URL
        key = api_key or os.environ.get(ENV_API_KEY)
        model = model_name or os.environ.get(ENV_MODEL)
        if not key:
            raise AuthError(
                f"API key not configured (flag or {ENV_API_KEY}); "
                "local endpoints usually accept any placeholder"
            )
        if not model:
            raise DomainError(f"model name not configured (flag or {ENV_MODEL})")
        return cls(base_url=base, api_key=key, model_name=model, **kwargs)


class HttpBackend:
    """Chat-completions client satisfying the Backend protocol.

    ``transport`` and ``sleep`` exist for tests: a canned transport
    plus a recording sleep make the retry state machine checkable
    without a network.
    """

    def __init__(
        self,
        config: BackendConfig,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
    ):
        self.config = config
        self._sleep = sleep
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            timeout=config.request_timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {config.api_key}"},
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def complete(self, request: ChatRequest) -> str:
        temperature = request.temperature
        if self.config.temperature is not None:
            temperature = self.config.temperature
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": temperature,
        }

        attempts = 1 + self.config.max_retries
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                delay = min(BACKOFF_BASE_SECONDS * 2 ** (attempt - 1), BACKOFF_CAP_SECONDS)
                log.debug("retrying %s after %.1fs (attempt %d/%d)",
                          request.role, delay, attempt + 1, attempts)
                self._sleep(delay)
            try:
                response = self._client.post("/v1/chat/completions", json=payload)
            except httpx.TimeoutException as e:
                last_error = NetworkError(f"request timed out: {e}")
                continue
            except httpx.TransportError as e:
                last_error = NetworkError(f"transport failure: {e}")
                continue

            status = response.status_code
            if status in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {status})")
            if status == 429:
                last_error = RateLimited("rate limited (HTTP 429)")
                continue
            if status >= 500:
                last_error = NetworkError(f"server error (HTTP {status})")
                continue
            if status != 200:
                raise MalformedResponse(f"unexpected HTTP {status}: {response.text[:200]}")
            return self._extract_content(response)

        assert last_error is not None
        raise last_error

    @staticmethod
    def _extract_content(response: httpx.Response) -> str:
        try:
            body = response.json()
        except ValueError as e:
            raise MalformedResponse(f"response body is not JSON: {e}") from e
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise MalformedResponse(f"no chat completion in response: {e}") from e
        if not isinstance(content, str):
            raise MalformedResponse(f"completion content is not text: {type(content).__name__}")
        return content
