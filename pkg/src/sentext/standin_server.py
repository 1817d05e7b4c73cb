"""Scriptable chat-completion stand-in server for offline runs.

Speaks the same wire protocol as the real service: POST with a JSON body
holding ``messages``, replies with ``choices[0].message.content``.  A
script decides the answer from the prompt text and can inject failure
statuses to exercise the client's retry path.
"""

from __future__ import annotations

import json
import sys
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path


@dataclass
class StandinScript:
    """Answer rules: first ``contains`` match wins, else the default.

    ``status_sequence`` is consumed one status per call before any rule
    runs; 200 entries answer normally, anything else is returned as a
    bare HTTP error.
    """

    rules: list[dict] = field(default_factory=list)
    default_answer: str = "high"
    status_sequence: list[int] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "StandinScript":
        rules = list(d.get("rules", []))
        for rule in rules:
            if "contains" not in rule or "answer" not in rule:
                raise ValueError("each rule needs 'contains' and 'answer'")
        return cls(
            rules=rules,
            default_answer=d.get("default_answer", "high"),
            status_sequence=list(d.get("status_sequence", [])),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "StandinScript":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def answer_for(self, prompt: str) -> str:
        for rule in self.rules:
            if rule["contains"] in prompt:
                return rule["answer"]
        return self.default_answer


class _Handler(BaseHTTPRequestHandler):
    server: "StandinServer"

    def do_POST(self):  # noqa: N802  (http.server naming)
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
        except ValueError:
            self._reply(400, {"error": "bad json"})
            return
        messages = payload.get("messages") or []
        prompt = messages[-1].get("content", "") if messages else ""
        status, answer = self.server.script_call(prompt, payload)
        if status != 200:
            self._reply(status, {"error": f"scripted status {status}"})
            return
        self._reply(200, {
            "choices": [{"message": {"role": "assistant", "content": answer}}],
        })

    def _reply(self, status: int, body: dict):
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):  # silence default stderr chatter
        pass


class StandinServer(ThreadingHTTPServer):
    """In-process server; use as a context manager in tests.

    ``calls`` records every request (prompt, model, temperature, monotonic
    timestamp) in arrival order.
    """

    def __init__(self, script: StandinScript | None = None,
                 host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.script = script or StandinScript()
        self.calls: list[dict] = []
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def script_call(self, prompt: str, payload: dict) -> tuple[int, str]:
        with self._lock:
            self.calls.append({
                "prompt": prompt,
                "model": payload.get("model"),
                "temperature": payload.get("temperature"),
                "t": time.monotonic(),
            })
            status = 200
            if self.script.status_sequence:
                status = self.script.status_sequence.pop(0)
        return status, self.script.answer_for(prompt)

    def start(self) -> "StandinServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def close(self):
        self.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.server_close()

    def __enter__(self) -> "StandinServer":
        return self.start()

    def __exit__(self, *exc):
        self.close()


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not 1 <= len(argv) <= 2:
        print("usage: python -m sentext.standin_server SCRIPT.json [PORT]",
              file=sys.stderr)
        return 1
    script = StandinScript.from_file(argv[0])
    port = int(argv[1]) if len(argv) == 2 else 8931
    server = StandinServer(script, port=port)
    print(f"stand-in service at {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
