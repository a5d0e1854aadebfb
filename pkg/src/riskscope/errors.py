"""Common error base.

Every error raised by this package carries a stable machine-readable
``code`` so the CLI can print uniform diagnostics and the HTTP layer can
map failures to ``{code, message, detail?}`` bodies without inspecting
exception types.
"""

from __future__ import annotations


class RiskscopeError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"

    def __init__(self, message: str, *, detail: object = None):
        super().__init__(message)
        self.detail = detail

    @property
    def message(self) -> str:
        return str(self)

    def to_payload(self) -> dict:
        payload = {"code": self.code, "message": self.message}
        if self.detail is not None:
            payload["detail"] = self.detail
        return payload
