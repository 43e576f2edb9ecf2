"""Atomic file writes and shared JSON conventions.

All artifact files are written to a temporary file in the target directory
and renamed into place, so readers never observe a partial file.  Floats are
serialized with ``repr`` (shortest round-trip form), which keeps outputs
byte-identical across runs with the same seeds.
"""

from __future__ import annotations

import json
import os
import tempfile


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def atomic_write_json(path, obj) -> None:
    atomic_write_text(path, dump_json(obj) + "\n")
