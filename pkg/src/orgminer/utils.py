"""Small shared helpers: seed derivation, stable hashing, apportionment."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Sequence


def derive_seed(master: int, stage: str) -> int:
    """Stable per-stage seed fanned out from one master seed."""
    digest = hashlib.sha256(f"{master}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stable_json(obj) -> str:
    """Canonical JSON text: sorted keys, no incidental whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def short_hash(data: bytes, length: int = 16) -> str:
    return content_hash(data)[:length]


def apportion(total: int, weights: Sequence[float]) -> list[int]:
    """Split ``total`` into integer parts proportional to ``weights``.

    Floor-plus-largest-remainder: deterministic and the parts always sum
    to ``total``. Ties on the remainder go to the lower index.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    if not weights:
        raise ValueError("weights must be non-empty")
    wsum = float(sum(weights))
    if wsum <= 0:
        raise ValueError("weights must have positive sum")
    quotas = [total * w / wsum for w in weights]
    parts = [math.floor(q) for q in quotas]
    shortfall = total - sum(parts)
    by_remainder = sorted(range(len(weights)), key=lambda i: (parts[i] - quotas[i], i))
    for i in by_remainder[:shortfall]:
        parts[i] += 1
    return parts
