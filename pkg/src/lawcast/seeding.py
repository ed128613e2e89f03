"""Deterministic per-component seed derivation.

All randomness in a run flows from one global seed. Components draw their
own seed by XOR-ing the global seed with a stable hash of a component
label, so any component can be reproduced in isolation.
"""

from __future__ import annotations

import hashlib

_MASK = (1 << 63) - 1


def derive_seed(seed: int, label: str) -> int:
    """Derive a component seed from the global seed and a label.

    Uses SHA-256 of the label (stable across platforms and processes,
    unlike the builtin ``hash``) folded to 63 bits.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    h = int.from_bytes(digest[:8], "big")
    return (seed ^ h) & _MASK
