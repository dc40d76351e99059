from __future__ import annotations

import json

import httpx
import pytest

from fairdecode.contracts import ChatRequest
from fairdecode.errors import (
    AuthError,
    DomainError,
    MalformedResponse,
    NetworkError,
    RateLimited,
)
from fairdecode.http import (
    BACKOFF_BASE_SECONDS,
    BackendConfig,
    DEFAULT_BASE_URL,
    ENV_API_KEY,
    ENV_BASE_URL,
    ENV_MODEL,
    HttpBackend,
)

REQ = ChatRequest("generate", ("ctx",), prompt="say a word", temperature=0.0)


def chat_body(content="word") -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


def config(**kwargs) -> BackendConfig:
    base = dict(base_url="http://test", api_key="k", model_name="m")
    base.update(kwargs)
    return BackendConfig(**base)


class Recorder:
    """Scripted transport plus a fake sleep; records everything."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests: list[httpx.Request] = []
        self.sleeps: list[float] = []

    def transport(self) -> httpx.MockTransport:
        def handler(request: httpx.Request) -> httpx.Response:
            self.requests.append(request)
            item = self.responses.pop(0)
            if isinstance(item, Exception):
                raise item
            return item

        return httpx.MockTransport(handler)

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)

    def backend(self, **cfg) -> HttpBackend:
        return HttpBackend(config(**cfg), transport=self.transport(), sleep=self.sleep)


class TestHappyPath:
    def test_returns_message_content(self):
        rec = Recorder([httpx.Response(200, json=chat_body("nurse"))])
        with rec.backend() as backend:
            assert backend.complete(REQ) == "nurse"
        assert rec.sleeps == []

    def test_wire_format(self):
        rec = Recorder([httpx.Response(200, json=chat_body())])
        with rec.backend() as backend:
            backend.complete(REQ)
        sent = rec.requests[0]
        assert sent.url.path == "/v1/chat/completions"
        assert sent.headers["authorization"] == "Bearer k"
        payload = json.loads(sent.content)
        assert payload == {
            "model": "m",
            "messages": [{"role": "user", "content": "say a word"}],
            "temperature": 0.0,
        }

    def test_request_temperature_is_forwarded(self):
        rec = Recorder([httpx.Response(200, json=chat_body())])
        with rec.backend() as backend:
            backend.complete(ChatRequest("generate_n", ("c",), "p", temperature=0.7))
        assert json.loads(rec.requests[0].content)["temperature"] == 0.7

    def test_config_temperature_overrides_request(self):
        rec = Recorder([httpx.Response(200, json=chat_body())])
        with rec.backend(temperature=0.2) as backend:
            backend.complete(ChatRequest("generate_n", ("c",), "p", temperature=0.7))
        assert json.loads(rec.requests[0].content)["temperature"] == 0.2


class TestRetries:
    def test_429_then_success_backs_off_once(self):
        rec = Recorder([httpx.Response(429), httpx.Response(200, json=chat_body())])
        with rec.backend() as backend:
            assert backend.complete(REQ) == "word"
        assert rec.sleeps == [BACKOFF_BASE_SECONDS]
        assert len(rec.requests) == 2

    def test_backoff_doubles_up_to_cap(self):
        rec = Recorder([httpx.Response(500)] * 5 + [httpx.Response(200, json=chat_body())])
        with rec.backend(max_retries=5) as backend:
            assert backend.complete(REQ) == "word"
        assert rec.sleeps == [0.5, 1.0, 2.0, 4.0, 8.0]

    def test_rate_limit_exhaustion_raises_rate_limited(self):
        rec = Recorder([httpx.Response(429)] * 3)
        with rec.backend(max_retries=2) as backend:
            with pytest.raises(RateLimited):
                backend.complete(REQ)
        assert len(rec.requests) == 3

    def test_server_errors_exhaust_to_network_error(self):
        rec = Recorder([httpx.Response(503)] * 2)
        with rec.backend(max_retries=1) as backend:
            with pytest.raises(NetworkError, match="HTTP 503"):
                backend.complete(REQ)

    def test_timeouts_are_retried(self):
        rec = Recorder([httpx.ConnectTimeout("slow"), httpx.Response(200, json=chat_body())])
        with rec.backend() as backend:
            assert backend.complete(REQ) == "word"
        assert len(rec.sleeps) == 1

    def test_transport_errors_are_retried(self):
        rec = Recorder([httpx.ConnectError("refused")] * 2)
        with rec.backend(max_retries=1) as backend:
            with pytest.raises(NetworkError, match="transport failure"):
                backend.complete(REQ)

    @pytest.mark.parametrize("status", [401, 403])
    def test_auth_failures_never_retry(self, status):
        rec = Recorder([httpx.Response(status)])
        with rec.backend(max_retries=5) as backend:
            with pytest.raises(AuthError):
                backend.complete(REQ)
        assert len(rec.requests) == 1
        assert rec.sleeps == []

    def test_zero_retries_fails_on_first_429(self):
        rec = Recorder([httpx.Response(429)])
        with rec.backend(max_retries=0) as backend:
            with pytest.raises(RateLimited):
                backend.complete(REQ)


class TestMalformedResponses:
    @pytest.mark.parametrize(
        "response",
        [
            httpx.Response(200, content=b"not json"),
            httpx.Response(200, json={"choices": []}),
            httpx.Response(200, json={"choices": [{"message": {}}]}),
            httpx.Response(200, json={"choices": [{"message": {"content": 42}}]}),
            httpx.Response(200, json={"something": "else"}),
        ],
    )
    def test_bad_200_is_terminal(self, response):
        rec = Recorder([response])
        with rec.backend(max_retries=3) as backend:
            with pytest.raises(MalformedResponse):
                backend.complete(REQ)
        assert len(rec.requests) == 1

    def test_unexpected_4xx_is_terminal(self):
        rec = Recorder([httpx.Response(404, text="nope")])
        with rec.backend(max_retries=3) as backend:
            with pytest.raises(MalformedResponse, match="HTTP 404"):
                backend.complete(REQ)
        assert len(rec.requests) == 1


class TestConfig:
    def test_from_env_reads_environment(self, monkeypatch):
        monkeypatch.setenv(ENV_BASE_URL, "http://envhost:8000")
        monkeypatch.setenv(ENV_API_KEY, "envkey")
        monkeypatch.setenv(ENV_MODEL, "envmodel")
        cfg = BackendConfig.from_env()
        assert (cfg.base_url, cfg.api_key, cfg.model_name) == (
            "http://envhost:8000", "envkey", "envmodel"
        )

    def test_flags_beat_environment(self, monkeypatch):
        monkeypatch.setenv(ENV_API_KEY, "envkey")
        monkeypatch.setenv(ENV_MODEL, "envmodel")
        cfg = BackendConfig.from_env(model_name="flag", api_key="flagkey")
        assert (cfg.model_name, cfg.api_key) == ("flag", "flagkey")
        assert cfg.base_url == DEFAULT_BASE_URL

    def test_missing_key_is_auth_error(self, monkeypatch):
        monkeypatch.delenv(ENV_API_KEY, raising=False)
        monkeypatch.setenv(ENV_MODEL, "m")
        with pytest.raises(AuthError):
            BackendConfig.from_env()

    def test_missing_model_is_domain_error(self, monkeypatch):
        monkeypatch.delenv(ENV_MODEL, raising=False)
        with pytest.raises(DomainError):
            BackendConfig.from_env(api_key="k")

    @pytest.mark.parametrize(
        "kwargs", [dict(max_retries=-1), dict(request_timeout=0), dict(temperature=-0.5)]
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(DomainError):
            config(**kwargs)
