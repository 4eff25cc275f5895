"""Discrete IRS reflection states over the b-bit uniform phase codebook."""

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["PhaseVector", "codebook"]


def codebook(bits):
    """Unit-modulus codebook ``exp(j 2 pi l / 2^bits)``, ``l = 0 .. 2^bits - 1``."""
    levels = 2**bits
    return np.exp(2j * np.pi * np.arange(levels) / levels)


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """Phase indices of the N IRS elements; element n reflects with
    ``exp(j 2 pi indices[n] / 2^bits)`` and unit amplitude."""

    indices: np.ndarray
    bits: int

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64).reshape(-1)
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")
        if idx.size and (idx.min() < 0 or idx.max() >= 2**self.bits):
            raise ValueError(f"phase indices must lie in [0, {2**self.bits})")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def zeros(cls, n, bits):
        return cls(np.zeros(n, dtype=np.int64), bits)

    @classmethod
    def random(cls, n, bits, rng):
        """Uniform draw from the codebook per element (random passive beamforming)."""
        return cls(rng.integers(0, 2**bits, size=n), bits)

    @property
    def n(self):
        return self.indices.size

    @property
    def phases(self):
        return 2 * np.pi * self.indices / 2**self.bits

    @property
    def coefficients(self):
        return np.exp(1j * self.phases)

    def digest(self):
        """Short stable hash of the state, used in iteration traces."""
        payload = np.int64(self.bits).tobytes() + self.indices.astype("<i8").tobytes()
        return hashlib.sha1(payload).hexdigest()[:12]

    def __eq__(self, other):
        if not isinstance(other, PhaseVector):
            return NotImplemented
        return self.bits == other.bits and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.bits, self.indices.tobytes()))

    def __len__(self):
        return self.n
