"""Small file helpers shared across the toolkit.

All writers go through :func:`atomic_write` so an interrupted run never
leaves a truncated artifact behind: content lands in a temp file in the
target directory and is renamed over the destination on success.
"""

from __future__ import annotations

import contextlib
import io
import os
import tempfile
from pathlib import Path


@contextlib.contextmanager
def atomic_write(path, mode: str = "w", encoding: str | None = None, newline: str | None = None):
    """Context manager yielding a file object; commits via rename on success."""
    path = Path(path)
    if "b" not in mode and encoding is None:
        encoding = "utf-8"
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        kwargs = {} if "b" in mode else {"encoding": encoding, "newline": newline}
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp_name, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp_name)
        raise


def open_maybe_path(source, mode: str = "r"):
    """Accept a path or an already-open stream; returns (stream, should_close)."""
    if isinstance(source, (str, os.PathLike)):
        encoding = None if "b" in mode else "utf-8"
        return open(source, mode, encoding=encoding), True
    return source, False


def read_exact(stream: io.BufferedIOBase, n: int, offset: int, what: str) -> bytes:
    """Read exactly n bytes or raise with the absolute byte offset."""
    data = stream.read(n)
    if data is None or len(data) != n:
        got = 0 if data is None else len(data)
        raise ValueError(f"truncated {what} at byte offset {offset}: wanted {n} bytes, got {got}")
    return data
