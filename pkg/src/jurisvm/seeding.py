"""Deterministic seed derivation.

All randomness in the toolkit flows from one master seed. Component seeds
are derived by hashing the master seed together with a path of string
labels, so adding or reordering pipeline stages never silently shifts the
random streams of unrelated stages.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *path: str | int) -> int:
    """Derive a 32-bit seed from `master` and a label path.

    Stable across platforms and Python versions (sha256-based, not `hash`).
    """
    key = str(int(master)) + "\x1f" + "\x1f".join(str(p) for p in path)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")
