"""Counter-based random streams.

Every OFDM block ``b`` owns independent streams keyed by ``(seed, b, stream)``
through the Philox counter, so a Monte Carlo run gives the same numbers no
matter how blocks are chunked or which thread evaluates them.
"""
from __future__ import annotations

import numpy as np

SYMBOLS = 0
NOISE = 1

_MASK64 = (1 << 64) - 1


def block_generator(seed: int, block: int, stream: int) -> np.random.Generator:
    # Draws advance counter word 0; words 2 and 3 pin the block and stream.
    bitgen = np.random.Philox(key=seed & _MASK64, counter=[0, 0, block, stream])
    return np.random.Generator(bitgen)


class BlockStream:
    """Random source for a contiguous range of block indices."""

    def __init__(self, seed: int, start: int, count: int):
        if count < 0:
            raise ValueError("count must be non-negative")
        self.seed = int(seed)
        self.start = int(start)
        self.count = int(count)

    @property
    def blocks(self) -> range:
        return range(self.start, self.start + self.count)

    def split(self, size: int) -> list["BlockStream"]:
        out = []
        for lo in range(self.start, self.start + self.count, size):
            n = min(size, self.start + self.count - lo)
            out.append(BlockStream(self.seed, lo, n))
        return out

    def symbols(self, n_data: int, mod_order: int) -> np.ndarray:
        """1-based symbol indices, shape ``(count, n_data)``."""
        out = np.empty((self.count, n_data), dtype=np.int64)
        for i, b in enumerate(self.blocks):
            out[i] = block_generator(self.seed, b, SYMBOLS).integers(1, mod_order + 1, n_data)
        return out

    def unit_noise(self, n: int) -> np.ndarray:
        """Circular complex Gaussian samples with unit variance, shape ``(count, n)``."""
        out = np.empty((self.count, n), dtype=np.complex128)
        view = out.view(np.float64).reshape(self.count, n, 2)
        for i, b in enumerate(self.blocks):
            block_generator(self.seed, b, NOISE).standard_normal((n, 2), out=view[i])
        out *= np.sqrt(0.5)
        return out

    def __repr__(self):
        return f"BlockStream(seed={self.seed}, start={self.start}, count={self.count})"
