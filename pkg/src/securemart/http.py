"""HTTP adapter: maps real requests onto the pure API route function.

Kept deliberately thin.  Anything testable lives behind ``ApiService.route``;
this file only parses wire bytes, serves the static UI bundle under /app,
and answers /app/config with the bootstrap the UI needs.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qsl, unquote, urlsplit

from .api import ApiRequest, ApiService
from .config import VERSION

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 1 << 20  # 1 MiB is plenty for a JSON storefront


def _find_static_dir(explicit: Optional[str]) -> Optional[Path]:
    if explicit:
        path = Path(explicit)
        return path if path.is_dir() else None
    # built frontend bundle, when the repo ships one
    here = Path(__file__).resolve()
    for candidate in (
        here.parent / "webui",
        here.parents[2] / "frontend" / "dist",
    ):
        if candidate.is_dir():
            return candidate
    return None


class PlatformServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True


def build_server(
    api: ApiService, host: str = "127.0.0.1", port: int = 8080,
    static_dir: Optional[str] = None,
) -> PlatformServer:
    static_root = _find_static_dir(static_dir)
    platform = api.platform

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "securemart/" + VERSION

        def log_message(self, fmt, *args):  # keep stderr quiet; ring captures it
            log.info("%s %s", self.address_string(), fmt % args)

        def do_GET(self):
            self._handle("GET")

        def do_POST(self):
            self._handle("POST")

        def do_PUT(self):
            self._handle("PUT")

        def do_DELETE(self):
            self._handle("DELETE")

        def _handle(self, method: str) -> None:
            parsed = urlsplit(self.path)
            path = unquote(parsed.path)

            if method == "GET" and (path == "/" or path == "/app" or path.startswith("/app/")):
                self._serve_app(path)
                return

            body, parse_error = self._read_body()
            if parse_error:
                self._send_json(400, {
                    "error_code": "validation_error",
                    "message": parse_error,
                    "request_id": "req_parse",
                })
                return

            request = ApiRequest(
                method=method,
                path=path,
                body=body,
                headers={k: v for k, v in self.headers.items()},
                query=dict(parse_qsl(parsed.query)),
                remote_addr=self.client_address[0],
            )
            response = api.route(request)
            self._send_json(response.status, response.body)

        def _read_body(self):
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return None, None
            if length > MAX_BODY_BYTES:
                return None, "request body too large"
            raw = self.rfile.read(length)
            try:
                parsed = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, ValueError):
                return None, "request body must be valid JSON"
            if not isinstance(parsed, dict):
                return None, "request body must be a JSON object"
            return parsed, None

        # -- static UI -------------------------------------------------------

        def _serve_app(self, path: str) -> None:
            if path == "/app/config":
                self._send_json(200, {
                    "api_base": "",
                    "sandbox": platform.config.sandbox,
                    "version": VERSION,
                    "poll_interval_ms": 2000,
                })
                return
            if static_root is None:
                self._send_json(404, {
                    "error_code": "not_found",
                    "message": "no UI bundle is installed",
                    "request_id": "req_static",
                })
                return
            rel = path[len("/app"):].lstrip("/") if path.startswith("/app") else ""
            target = (static_root / rel).resolve() if rel else static_root / "index.html"
            try:
                target.relative_to(static_root.resolve())
            except ValueError:
                self.send_error(403)
                return
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                # SPA fallback: unknown UI paths load the shell
                target = static_root / "index.html"
                if not target.is_file():
                    self.send_error(404)
                    return
            data = target.read_bytes()
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Cache-Control", "no-store")
            self.end_headers()
            self.wfile.write(data)

        def _send_json(self, status: int, payload: dict) -> None:
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    return PlatformServer((host, port), Handler)


def serve_background(api: ApiService, host: str = "127.0.0.1", port: int = 0,
                     static_dir: Optional[str] = None) -> tuple[PlatformServer, threading.Thread]:
    """Start a server on a daemon thread; returns (server, thread)."""
    server = build_server(api, host, port, static_dir)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
