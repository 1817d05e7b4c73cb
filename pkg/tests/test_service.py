import http.server
import threading
import time

import pytest

from sentext.errors import (
    AuthError,
    MalformedServiceReplyError,
    RateLimitExhaustedError,
    TransportError,
)
from sentext.llm import PromptRequest, ServiceConfig, query_service, run_requests
from sentext.standin_server import StandinScript, StandinServer


@pytest.fixture(autouse=True)
def credential(monkeypatch):
    monkeypatch.setenv("SENTEXT_API_KEY", "test-key")


def request_for(text="is it high or low?"):
    return PromptRequest(prompt_text=text, categories=("high", "low"),
                         key=("p", "e"))


def config_for(server, **kw):
    kw.setdefault("backoff_base_s", 0.01)
    return ServiceConfig(endpoint_url=server.url, **kw)


def test_roundtrip_scripted_answer():
    script = StandinScript(rules=[{"contains": "gloomy", "answer": "low"}],
                           default_answer="high")
    with StandinServer(script) as server:
        cfg = config_for(server)
        assert query_service(request_for("a gloomy day"), cfg) == "low"
        assert query_service(request_for("a sunny day"), cfg) == "high"
    assert [c["model"] for c in server.calls] == ["gpt-3.5-turbo"] * 2
    assert [c["temperature"] for c in server.calls] == [0.0, 0.0]


def test_retry_after_two_rate_limits():
    script = StandinScript(status_sequence=[429, 429, 200])
    sleeps = []
    with StandinServer(script) as server:
        cfg = config_for(server, max_retries=3, backoff_base_s=0.5)
        answer = query_service(request_for(), cfg, sleep=sleeps.append)
    assert answer == "high"
    assert len(server.calls) == 3
    # deterministic exponential backoff: base, then doubled
    assert sleeps == [0.5, 1.0]


def test_retry_backoff_real_clock():
    script = StandinScript(status_sequence=[500, 200])
    with StandinServer(script) as server:
        cfg = config_for(server, max_retries=1, backoff_base_s=0.2)
        t0 = time.monotonic()
        query_service(request_for(), cfg)
        elapsed = time.monotonic() - t0
    assert elapsed >= 0.2
    assert len(server.calls) == 2


def test_rate_limit_exhausted():
    script = StandinScript(status_sequence=[429] * 10)
    with StandinServer(script) as server:
        cfg = config_for(server, max_retries=2)
        with pytest.raises(RateLimitExhaustedError):
            query_service(request_for(), cfg, sleep=lambda s: None)
    assert len(server.calls) == 3  # first try plus two retries


def test_persistent_server_error():
    script = StandinScript(status_sequence=[500, 502, 503])
    with StandinServer(script) as server:
        cfg = config_for(server, max_retries=2)
        with pytest.raises(TransportError):
            query_service(request_for(), cfg, sleep=lambda s: None)
    assert len(server.calls) == 3


def test_missing_credential_never_reaches_network(monkeypatch):
    monkeypatch.delenv("SENTEXT_API_KEY", raising=False)
    with StandinServer(StandinScript()) as server:
        with pytest.raises(AuthError):
            query_service(request_for(), config_for(server))
    assert server.calls == []


def test_credential_env_is_configurable(monkeypatch):
    monkeypatch.delenv("SENTEXT_API_KEY", raising=False)
    monkeypatch.setenv("OTHER_KEY", "k")
    with StandinServer(StandinScript()) as server:
        cfg = config_for(server, credential_env="OTHER_KEY")
        assert query_service(request_for(), cfg) == "high"


def test_auth_rejection_is_not_retried():
    script = StandinScript(status_sequence=[401, 200])
    with StandinServer(script) as server:
        cfg = config_for(server, max_retries=3)
        with pytest.raises(AuthError):
            query_service(request_for(), cfg)
    assert len(server.calls) == 1


def test_unexpected_client_error_is_transport():
    script = StandinScript(status_sequence=[418])
    with StandinServer(script) as server:
        with pytest.raises(TransportError):
            query_service(request_for(), config_for(server))


class _GarbageHandler(http.server.BaseHTTPRequestHandler):
    body = b"<html>totally not json</html>"

    def do_POST(self):  # noqa: N802
        self.rfile.read(int(self.headers.get("Content-Length", "0")))
        self.send_response(200)
        self.send_header("Content-Length", str(len(self.body)))
        self.end_headers()
        self.wfile.write(self.body)

    def log_message(self, fmt, *args):
        pass


def garbage_server(body):
    handler = type("H", (_GarbageHandler,), {"body": body})
    server = http.server.HTTPServer(("127.0.0.1", 0), handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server


@pytest.mark.parametrize("body", [
    b"<html>totally not json</html>",
    b'{"choices": []}',
    b'{"choices": [{"message": {}}]}',
    b'{"choices": [{"message": {"content": 5}}]}',
])
def test_malformed_reply(body):
    server = garbage_server(body)
    try:
        url = "http://127.0.0.1:%d/v1/chat/completions" % server.server_address[1]
        cfg = ServiceConfig(endpoint_url=url)
        with pytest.raises(MalformedServiceReplyError):
            query_service(request_for(), cfg)
    finally:
        server.shutdown()
        server.server_close()


def test_connection_refused_is_transport():
    cfg = ServiceConfig(endpoint_url="http://127.0.0.1:9/v1/chat/completions",
                        timeout_s=2.0)
    with pytest.raises(TransportError):
        query_service(request_for(), cfg)


def test_batch_preserves_order():
    script = StandinScript(rules=[
        {"contains": f"item {i:02d}", "answer": f"answer {i}"} for i in range(12)
    ])
    reqs = [request_for(f"this is item {i:02d} text") for i in range(12)]
    with StandinServer(script) as server:
        cfg = config_for(server, max_in_flight=4)
        answers = run_requests(reqs, cfg)
    assert answers == [f"answer {i}" for i in range(12)]
    assert len(server.calls) == 12


def test_batch_single_worker_and_empty():
    with StandinServer(StandinScript()) as server:
        cfg = config_for(server, max_in_flight=1)
        assert run_requests([], cfg) == []
        assert run_requests([request_for()], cfg) == ["high"]
