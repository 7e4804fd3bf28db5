"""File-per-digest result cache.

Records are JSON files named ``<digest>.json``.  Writers go through a
temporary file in the same directory followed by an atomic rename, so
concurrent writers never expose a partial record.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path

logger = logging.getLogger(__name__)

ENV_VAR = "OPSYS_INDEX_CACHE"


def cache_dir(flag: str | None) -> Path | None:
    """The cache directory from ``--cache-dir`` or ``$OPSYS_INDEX_CACHE``; ``None`` disables caching."""
    d = flag or os.environ.get(ENV_VAR)
    return Path(d) if d else None


class ResultCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def lookup(self, key: str, params: dict) -> dict | None:
        """Return the stored record if its digest and solver parameters match exactly."""
        path = self._path(key)
        if not path.exists():
            return None
        try:
            rec = json.loads(path.read_text())
            if not isinstance(rec, dict):
                raise ValueError("record is not a JSON object")
        except (OSError, ValueError) as exc:
            logger.warning("skipping corrupted cache record %s: %s", path, exc)
            return None
        if rec.get("digest") != key or rec.get("parameters") != params:
            return None
        return rec

    def store(self, key: str, text: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{key}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
