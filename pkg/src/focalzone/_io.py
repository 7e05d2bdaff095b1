"""Atomic file output and small CSV/JSON helpers."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path


def write_text_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_all_atomic(files: dict):
    """Write ``{path: text}``; every file is rendered before the first write."""
    for path, text in files.items():
        write_text_atomic(path, text)


def dumps_json(obj) -> str:
    # sorted keys + repr floats: identical inputs give identical bytes
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def read_csv_dicts(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
