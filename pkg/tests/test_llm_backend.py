"""
Tests del backend de completions (httpx.MockTransport, sin red)
"""

import json

import httpx
import pytest

from src.config import BackendConfig
from src.exceptions import (
    BackendAuthError,
    BackendError,
    DataValidationError,
    EmptyCompletionError,
    MalformedResponseError,
    PromptTemplateError,
    RetriesExhaustedError,
    ScriptExhaustedError,
)
from src.llm_backend import (
    ChatMessage,
    CompletionRequest,
    OpenAIChatBackend,
    load_script,
    make_scripted_backend,
    script_hash,
)

API_KEY_VAR = "AGENTSBENCH_TEST_KEY"


def _ok(content):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


def _backend(monkeypatch, handler, sleeps=None, **config):
    monkeypatch.setenv(API_KEY_VAR, "sk-test")
    backend_config = BackendConfig(
        base_url="https://llm.example.com/v1",
        api_key_env_var=API_KEY_VAR,
        **config,
    )
    recorder = sleeps.append if sleeps is not None else (lambda _: None)
    return OpenAIChatBackend(backend_config, transport=httpx.MockTransport(handler), sleep=recorder)


# ============================================================================
# PETICIONES
# ============================================================================

def test_payload_defaults(simple_request):
    payload = simple_request.to_payload()
    assert payload == {
        "model": "gpt-4",
        "messages": [{"role": "user", "content": "刑期是多少？"}],
        "temperature": 0.0,
        "top_p": 1.0,
    }


def test_payload_includes_max_tokens():
    request = CompletionRequest(
        model="m", messages=[ChatMessage("user", "hola")], max_tokens=256
    )
    assert request.to_payload()["max_tokens"] == 256
    assert isinstance(request.messages, tuple)


@pytest.mark.parametrize("kwargs", [
    {"messages": ()},
    {"messages": (ChatMessage("user", "x"),), "temperature": -0.1},
    {"messages": (ChatMessage("user", "x"),), "top_p": 0.0},
    {"messages": (ChatMessage("user", "x"),), "max_tokens": 0},
])
def test_invalid_requests(kwargs):
    with pytest.raises(PromptTemplateError):
        CompletionRequest(model="m", **kwargs)


def test_chat_message_validation():
    with pytest.raises(PromptTemplateError):
        ChatMessage("tool", "x")
    with pytest.raises(PromptTemplateError):
        ChatMessage("user", "   ")
    assert ChatMessage("assistant", "").content == ""


# ============================================================================
# BACKEND HTTP
# ============================================================================

def test_complete_sends_bearer_and_payload(monkeypatch, simple_request):
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["Authorization"]
        seen["body"] = json.loads(request.content)
        return _ok("刑期：54个月\n理由：……")

    with _backend(monkeypatch, handler) as backend:
        assert backend.complete(simple_request) == "刑期：54个月\n理由：……"

    assert seen["url"] == "https://llm.example.com/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-test"
    assert seen["body"] == simple_request.to_payload()


def test_missing_api_key_is_auth_error(monkeypatch):
    monkeypatch.delenv(API_KEY_VAR, raising=False)
    with pytest.raises(BackendAuthError):
        OpenAIChatBackend(BackendConfig(api_key_env_var=API_KEY_VAR))


@pytest.mark.parametrize("status", [401, 403])
def test_auth_rejection_is_not_retried(monkeypatch, simple_request, status):
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(status, json={"error": "denied"})

    backend = _backend(monkeypatch, handler)
    with pytest.raises(BackendAuthError):
        backend.complete(simple_request)
    assert len(calls) == 1


def test_transient_errors_retried_then_succeed(monkeypatch, simple_request):
    responses = iter([httpx.Response(429), httpx.Response(503), _ok("刑期：12个月")])
    sleeps = []
    backend = _backend(monkeypatch, lambda request: next(responses), sleeps=sleeps)

    assert backend.complete(simple_request) == "刑期：12个月"
    assert sleeps == [0.5, 1.0]


def test_retries_exhausted_with_non_decreasing_delays(monkeypatch, simple_request):
    calls = []
    sleeps = []

    def handler(request):
        calls.append(request)
        return httpx.Response(500)

    backend = _backend(monkeypatch, handler, sleeps=sleeps, max_retries=3, initial_backoff_ms=500)
    with pytest.raises(RetriesExhaustedError):
        backend.complete(simple_request)

    assert len(calls) == 4
    assert sleeps == [0.5, 1.0, 2.0]
    assert all(a <= b for a, b in zip(sleeps, sleeps[1:]))


def test_backoff_capped_at_sixty_seconds(monkeypatch, simple_request):
    sleeps = []
    backend = _backend(
        monkeypatch, lambda request: httpx.Response(502), sleeps=sleeps,
        max_retries=4, initial_backoff_ms=20000,
    )
    with pytest.raises(RetriesExhaustedError):
        backend.complete(simple_request)
    assert sleeps == [20.0, 40.0, 60.0, 60.0]


def test_timeout_is_transient(monkeypatch, simple_request):
    attempts = []

    def handler(request):
        attempts.append(request)
        if len(attempts) == 1:
            raise httpx.ReadTimeout("slow", request=request)
        return _ok("ok")

    backend = _backend(monkeypatch, handler)
    assert backend.complete(simple_request) == "ok"
    assert len(attempts) == 2


def test_client_error_not_retried(monkeypatch, simple_request):
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(400, text="bad request")

    backend = _backend(monkeypatch, handler)
    with pytest.raises(BackendError) as exc:
        backend.complete(simple_request)
    assert not isinstance(exc.value, RetriesExhaustedError)
    assert len(calls) == 1


@pytest.mark.parametrize("body, error", [
    ({"choices": []}, MalformedResponseError),
    ({"unexpected": True}, MalformedResponseError),
    ({"choices": [{"message": {"content": None}}]}, EmptyCompletionError),
    ({"choices": [{"message": {"content": "   "}}]}, EmptyCompletionError),
])
def test_unusable_responses(monkeypatch, simple_request, body, error):
    backend = _backend(monkeypatch, lambda request: httpx.Response(200, json=body))
    with pytest.raises(error):
        backend.complete(simple_request)


# ============================================================================
# BACKEND GUIONIZADO
# ============================================================================

def test_scripted_backend_replays_in_order(simple_request):
    backend = make_scripted_backend(["uno", "dos"])
    assert backend.complete(simple_request) == "uno"
    assert backend.complete(simple_request) == "dos"
    assert backend.call_count == 2
    assert backend.remaining == 0
    assert backend.requests == [simple_request, simple_request]

    with pytest.raises(ScriptExhaustedError, match="script exhausted"):
        backend.complete(simple_request)
    assert backend.call_count == 3


def test_scripted_backend_copies_script(simple_request):
    script = ["a"]
    backend = make_scripted_backend(script)
    script.append("b")
    backend.complete(simple_request)
    assert backend.remaining == 0


def test_load_script_shapes(tmp_path, fixtures_dir):
    assert len(load_script(fixtures_dir / "reference_script.json")) == 15

    by_case = tmp_path / "by_case.json"
    by_case.write_text(json.dumps({"c1": ["a"], "c2": []}), encoding="utf-8")
    assert load_script(by_case) == {"c1": ["a"], "c2": []}

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"c1": "a"}), encoding="utf-8")
    with pytest.raises(DataValidationError):
        load_script(bad)


def test_script_hash_is_stable():
    assert script_hash(["a", "b"]) == script_hash(["a", "b"])
    assert script_hash(["a", "b"]) != script_hash(["b", "a"])
    assert script_hash({"x": ["1"], "y": ["2"]}) == script_hash({"y": ["2"], "x": ["1"]})
