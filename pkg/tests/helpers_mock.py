"""Instrumented chat-completion mock endpoint for client tests."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class Request:
    def __init__(self, index: int, payload: dict, received_at: float, headers=None):
        self.index = index
        self.payload = payload
        self.received_at = received_at
        self.headers = headers or {}

    @property
    def prompt(self) -> str:
        return self.payload["messages"][0]["content"][0]["text"]


class MockEndpoint:
    """Threaded HTTP server that scripts responses and records concurrency.

    ``behavior(request) -> (status, body)`` decides each response; body may
    be a plain string (wrapped as a chat completion) or a dict (sent
    verbatim).  ``delay_s`` sleeps inside the handler so in-flight counts
    are observable.
    """

    def __init__(self, behavior=None, delay_s: float = 0.0):
        self.behavior = behavior or (lambda req: (200, "ok"))
        self.delay_s = delay_s
        self.requests: list[Request] = []
        self.max_in_flight = 0
        self._in_flight = 0
        self._lock = threading.Lock()
        endpoint = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
                with endpoint._lock:
                    endpoint._in_flight += 1
                    endpoint.max_in_flight = max(
                        endpoint.max_in_flight, endpoint._in_flight
                    )
                    req = Request(
                        len(endpoint.requests),
                        payload,
                        time.monotonic(),
                        dict(self.headers),
                    )
                    endpoint.requests.append(req)
                try:
                    if endpoint.delay_s:
                        time.sleep(endpoint.delay_s)
                    status, body = endpoint.behavior(req)
                    if isinstance(body, str):
                        body = {"choices": [{"message": {"content": body}}]}
                    data = json.dumps(body).encode("utf-8")
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                finally:
                    with endpoint._lock:
                        endpoint._in_flight -= 1

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "MockEndpoint":
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
