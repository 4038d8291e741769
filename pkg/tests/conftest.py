"""Shared fixtures and helpers for the test suite."""
import numpy as np

# Pre-registered seed for all statistical fixtures, chosen before any test
# was run so results are deterministic without being tuned.
FIXTURE_SEED = 0xF1C5


def random_items(count: int, seed: int) -> list[bytes]:
    """Distinct byte items with varied lengths."""
    rng = np.random.default_rng(seed)
    return [f"item-{i}-{int(rng.integers(1 << 30))}".encode() for i in range(count)]
