"""Deterministic sub-seed derivation.

Every stochastic component takes its own seed derived from the study seed
plus a label path, so streams stay independent and reproducible across
platforms (no reliance on hash randomization).
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Collapse a label path into a 64-bit integer seed."""
    text = "\x1f".join(str(part) for part in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
