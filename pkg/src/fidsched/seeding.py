"""Sub-seed derivation: a sha256 chain from one master seed and role labels."""
from __future__ import annotations

import hashlib


def derive_seed(master: int, *labels: str | int) -> int:
    """Deterministic 63-bit seed for ``labels`` under ``master``.

    Each label is folded into the running digest, so
    ``derive_seed(s, "eval", 3) == derive_seed(derive_seed(s, "eval"), 3)``.
    """
    seed = int(master)
    for label in labels:
        h = hashlib.sha256(f"{seed}:{label}".encode()).digest()
        seed = int.from_bytes(h[:8], "big") >> 1
    return seed
