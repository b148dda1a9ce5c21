"""Shared error type with machine-parsable codes."""

from __future__ import annotations


class WallgradError(Exception):
    """Raised on any contract violation.

    Formats as ``<module>.<code>: <detail>`` so the CLI can emit a single
    machine-parsable ``error:`` line.
    """

    def __init__(self, module: str, code: str, detail: str):
        self.module = module
        self.code = code
        self.detail = detail
        super().__init__(f"{module}.{code}: {detail}")
