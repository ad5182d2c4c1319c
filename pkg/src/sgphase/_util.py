"""Small numeric and infrastructure helpers."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np


def sinc(z):
    """sin(z)/z with the removable singularity handled (numpy's sinc is normalized to pi)."""
    return np.sinc(np.asarray(z) / np.pi)


class NeumaierSum:
    """Compensated elementwise accumulator for arrays, stable under a fixed summand order."""

    def __init__(self, shape):
        self._s = np.zeros(shape)
        self._c = np.zeros(shape)

    def add(self, term):
        t = self._s + term
        swap = np.abs(self._s) >= np.abs(term)
        self._c += np.where(swap, (self._s - t) + term, (term - t) + self._s)
        self._s = t

    @property
    def total(self):
        return self._s + self._c


def ordered_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Map preserving item order; results are identical for any worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def checksum_of(header: dict, *arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(canonical_json(header).encode())
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cache_dir() -> Path:
    env = os.environ.get("SGPHASE_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "sgphase"
