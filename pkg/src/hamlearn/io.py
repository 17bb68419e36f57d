"""File formats: Hamiltonian JSON, CSV tables and manifests."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from .hamiltonian import LowIntersectionHamiltonian


def load_hamiltonian(path) -> LowIntersectionHamiltonian:
    with open(path, encoding="utf-8") as fh:
        return LowIntersectionHamiltonian.from_dict(json.load(fh))


def save_hamiltonian(h: LowIntersectionHamiltonian, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(h.to_dict(), fh, indent=2)
        fh.write("\n")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return path


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def config_hash(data: dict) -> str:
    """Short content hash of a configuration (12 hex digits, like an abbreviated commit id)."""
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha1(blob.encode("utf-8")).hexdigest()[:12]


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
