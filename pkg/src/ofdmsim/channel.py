"""Baseband channel impairments: multipath, AWGN, CFO and timing offset.

Randomness comes from a counter-based Philox generator seeded through
numpy's SeedSequence, with Gaussian noise drawn by Box-Muller from the
uniform stream.  Both algorithms are fixed here so a (spec, seed) pair
reproduces bit-identical sample streams across runs and platforms.
Independent per-run seeds are derived with ``derive_seed(seed, index)``.
"""

import math
from dataclasses import dataclass

import numpy as np


def make_rng(seed) -> np.random.Generator:
    """Philox generator for the given seed (int or tuple of ints)."""
    return np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(seed)))


def derive_seed(seed: int, index: int) -> tuple:
    """Split a base seed into the independent stream for run ``index``."""
    return (int(seed), int(index))


def gaussian_pairs(rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. standard-normal pairs as complex values, via Box-Muller.

    Uses log(1-u) so the open end of the uniform stream can never hit
    log(0).
    """
    u1 = rng.random(n)
    u2 = rng.random(n)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    return r * np.cos(2.0 * np.pi * u2) + 1j * r * np.sin(2.0 * np.pi * u2)


@dataclass
class ChannelSpec:
    """Impairment description for one simulated link.

    taps: (delay_samples, complex gain) pairs with strictly increasing
    non-negative delays; the largest delay is the channel's delay spread.
    cfo_fraction is the carrier offset as a fraction of the subcarrier
    spacing; timing_offset is in whole samples (positive = late).
    """

    taps: tuple = ((0, 1.0 + 0j),)
    snr_db: float = math.inf
    cfo_fraction: float = 0.0
    timing_offset: int = 0
    seed: int = 0

    def __post_init__(self):
        taps = tuple((int(d), complex(g)) for d, g in self.taps)
        if not taps:
            raise ValueError("at least one tap is required")
        delays = [d for d, _ in taps]
        if delays[0] < 0 or any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError("tap delays must be non-negative and strictly increasing")
        self.taps = taps

    @property
    def delay_spread(self) -> int:
        return self.taps[-1][0]

    def impulse_response(self) -> np.ndarray:
        h = np.zeros(self.delay_spread + 1, dtype=np.complex128)
        for d, g in self.taps:
            h[d] = g
        return h

    def frequency_response(self, n_fft: int) -> np.ndarray:
        """Per-subcarrier response H_k = sum_i gain_i * exp(-j2pi k d_i / N)."""
        k = np.arange(n_fft)
        h = np.zeros(n_fft, dtype=np.complex128)
        for d, g in self.taps:
            h += g * np.exp(-2j * np.pi * k * d / n_fft)
        return h


def apply_multipath(samples, taps) -> np.ndarray:
    """Tapped-delay-line convolution; output grows by the delay spread."""
    x = np.asarray(samples, dtype=np.complex128)
    spec = ChannelSpec(taps=tuple(taps))
    return np.convolve(x, spec.impulse_response())


def apply_awgn(samples, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise at the given SNR.

    Noise variance is measured_signal_power / 10^(snr_db/10), split equally
    between the real and imaginary components.  Infinite SNR is the identity
    (and consumes no random numbers).
    """
    x = np.asarray(samples, dtype=np.complex128)
    if len(x) == 0:
        raise ValueError("cannot add noise to an empty signal")
    if math.isinf(snr_db):
        return x.copy()
    power = float(np.mean(np.abs(x) ** 2))
    noise_var = power / (10.0 ** (snr_db / 10.0))
    return x + math.sqrt(noise_var / 2.0) * gaussian_pairs(rng, len(x))


def apply_cfo(samples, cfo_fraction: float, n_fft: int) -> np.ndarray:
    """Rotate y[n] = x[n] * exp(j2pi * cfo * n / N)."""
    x = np.asarray(samples, dtype=np.complex128)
    if cfo_fraction == 0.0:
        return x.copy()
    n = np.arange(len(x))
    return x * np.exp(2j * np.pi * cfo_fraction * n / n_fft)


def apply_timing_offset(samples, offset: int) -> np.ndarray:
    """Delay by prepending zeros (positive) or drop leading samples (negative)."""
    x = np.asarray(samples, dtype=np.complex128)
    if abs(offset) >= len(x):
        raise ValueError(f"offset {offset} out of range for {len(x)} samples")
    if offset == 0:
        return x.copy()
    if offset > 0:
        return np.concatenate([np.zeros(offset, dtype=np.complex128), x])
    return x[-offset:].copy()


def apply_channel(samples, spec: ChannelSpec, n_fft: int) -> np.ndarray:
    """Run the full impairment chain: multipath, CFO, timing offset, AWGN."""
    y = apply_multipath(samples, spec.taps)
    y = apply_cfo(y, spec.cfo_fraction, n_fft)
    y = apply_timing_offset(y, spec.timing_offset)
    return apply_awgn(y, spec.snr_db, make_rng(spec.seed))
