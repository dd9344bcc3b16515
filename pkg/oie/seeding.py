"""
Deterministic seeding. One root seed fans out into labelled sub-seeds so a
new pipeline stage never shifts the random stream of an existing one.
"""
import hashlib
import logging

import numpy as np

logger = logging.getLogger(__name__)

SEED_BITS = 64


def derive_seed(seed: int, label: str) -> int:
    """Sub-seed for `label`: first 8 bytes of sha256("{seed}:{label}"), little endian."""
    digest = hashlib.sha256(f"{int(seed)}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int, label: str | None = None) -> np.random.Generator:
    if label is not None:
        seed = derive_seed(seed, label)
    return np.random.default_rng(int(seed))


def resolve_seed(seed: int | None) -> tuple[int, bool]:
    """Return (seed, generated). A missing seed is drawn from OS entropy."""
    if seed is not None:
        return int(seed), False
    generated = int(np.random.SeedSequence().entropy) % (2**SEED_BITS)
    logger.info(f"No seed given, generated {generated}")
    return generated, True
