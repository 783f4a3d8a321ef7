"""Small file helpers shared by the serializers.

Every writer in the package goes through :func:`atomic_write_text` so a
crashed process never leaves a half-written artifact behind.
"""

from __future__ import annotations

import os
import tempfile

from .errors import DataFormatError


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=False)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_text(path: str) -> str:
    try:
        with open(path, "r", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc


def parse_float(token: str, context: str) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise DataFormatError(f"{context}: not a number: {token!r}") from exc
