"""In-process API client the harness drives scenarios through.

Goes through ApiService.route like any remote caller would: same guards,
same envelopes, no shortcuts into the services.
"""

from __future__ import annotations

import base64
from typing import Any, Dict, Optional

from ..api import ApiRequest, ApiResponse, ApiService
from ..paygate import new_client_key, seal_envelope


class ApiClient:
    def __init__(self, api: ApiService, remote_addr: str = "10.0.0.1", tag: str = ""):
        self.api = api
        self.remote_addr = remote_addr
        self.tag = tag
        self.token: Optional[str] = None
        self._envelope_key: Optional[bytes] = None
        self._envelope_key_id: Optional[str] = None

    def call(
        self,
        method: str,
        path: str,
        body: Optional[dict] = None,
        query: Optional[Dict[str, str]] = None,
    ) -> ApiResponse:
        headers: Dict[str, str] = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        if self.tag:
            headers["X-Client-Tag"] = self.tag
        return self.api.route(ApiRequest(
            method=method,
            path=path,
            body=body,
            headers=headers,
            query=query or {},
            remote_addr=self.remote_addr,
        ))

    # -- auth ------------------------------------------------------------------

    def register(self, email: str, password: str) -> ApiResponse:
        return self.call("POST", "/api/auth/register", {"email": email, "password": password})

    def login(self, email: str, password: str) -> ApiResponse:
        response = self.call("POST", "/api/auth/login", {"email": email, "password": password})
        if response.ok and not response.body.get("otp_required"):
            self.token = response.body["token"]
        return response

    def verify_otp(self, challenge_id: str, code: str) -> ApiResponse:
        response = self.call(
            "POST", "/api/auth/otp/verify", {"challenge_id": challenge_id, "code": code}
        )
        if response.ok:
            self.token = response.body["token"]
        return response

    def latest_otp_code(self, email: str) -> Optional[str]:
        """Read the newest sandbox-outbox code addressed to this email."""
        response = self.call("GET", "/dev/otp-outbox")
        if not response.ok:
            return None
        for entry in reversed(response.body["entries"]):
            if entry["email"] == email:
                return entry["code"]
        return None

    # -- payments -----------------------------------------------------------------

    def ensure_envelope_key(self) -> str:
        if self._envelope_key_id is None:
            self._envelope_key = new_client_key()
            response = self.call("POST", "/api/payments/client-key", {
                "key": base64.b64encode(self._envelope_key).decode(),
            })
            if not response.ok:
                raise RuntimeError(f"client key enrolment failed: {response.body}")
            self._envelope_key_id = response.body["key_id"]
        return self._envelope_key_id

    def seal_card_payload(self, payload: Dict[str, Any]) -> dict:
        key_id = self.ensure_envelope_key()
        assert self._envelope_key is not None
        return seal_envelope(self._envelope_key, key_id, payload)
