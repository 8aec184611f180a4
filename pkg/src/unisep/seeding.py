"""Deterministic seed derivation for hierarchical RNG streams."""

import hashlib

_SEP = "\x1f"


def derive_seed(*parts) -> int:
    """Hash an arbitrary tuple of labels/ints into a stable 63-bit seed.

    Stable across processes and platforms, so any pipeline stage can derive
    per-item streams from one root seed.
    """
    msg = _SEP.join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(msg).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF
