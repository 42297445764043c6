"""BPSK over AWGN with counter-based per-frame seeding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    """Noise model for one (code rate, Eb/N0) operating point.

    sigma2 follows the data-bit energy convention
    sigma^2 = 1 / (2 * rate * 10^(ebn0_db/10)); ``noise_scale`` is a test
    hook (0 disables noise while keeping the LLR scaling).
    """

    ebn0_db: float
    rate: float
    noise_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.rate <= 1:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")

    @property
    def sigma2(self) -> float:
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebn0_db / 10.0))


def frame_rng(master_seed: int, frame_index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; identical output for identical keys no
    matter how frames are ordered across workers."""
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF, frame_index], dtype=np.uint64)
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def modulate(c) -> np.ndarray:
    """BPSK map: bit 0 -> +1, bit 1 -> -1."""
    c = np.asarray(c)
    return 1.0 - 2.0 * c.astype(np.float64)


def awgn_llrs(x, params: ChannelParams, seed_material) -> np.ndarray:
    """Transmit ``x`` and return the channel LLRs 2*y/sigma^2.

    ``seed_material`` is (master_seed, frame_index); noise is drawn from
    a dedicated per-frame stream.
    """
    x = np.asarray(x, dtype=np.float64)
    master_seed, frame_index = seed_material
    sigma2 = params.sigma2
    y = x
    if params.noise_scale > 0:
        rng = frame_rng(master_seed, frame_index, stream=1)
        y = x + params.noise_scale * np.sqrt(sigma2) * rng.standard_normal(x.size)
    return 2.0 * y / sigma2
