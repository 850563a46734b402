"""Complex-baseband OFDM symbol primitives.

The modulator maps N frequency-domain values X_k onto N orthogonal
subcarriers with an unnormalized inverse-DFT sum

    x[n] = sum_k X_k * exp(j*2*pi*k*n/N),   n = 0..N-1

and the demodulator applies the matching forward DFT with the 1/N factor,
so the two are exact inverses.  With this scaling Parseval reads
sum|x[n]|^2 = N * sum|X_k|^2.  All arithmetic is double precision complex.
"""

from dataclasses import dataclass

import numpy as np


def _as_signal(samples) -> np.ndarray:
    """Coerce to a 1-D complex128 array, rejecting NaN/Inf."""
    arr = np.asarray(samples, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sample sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal contains non-finite samples")
    return arr


def _check_fft_size(n: int) -> None:
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"transform size must be a power of two >= 2, got {n}")


@dataclass
class FrequencyDomainSymbol:
    """Per-subcarrier values X_k of one OFDM symbol (bin k = 0..n_fft-1)."""

    bins: np.ndarray
    n_fft: int

    def __post_init__(self):
        self.bins = _as_signal(self.bins)
        if len(self.bins) != self.n_fft:
            raise ValueError(
                f"bins has length {len(self.bins)}, expected n_fft={self.n_fft}"
            )


@dataclass
class TimeDomainSymbol:
    """Time-domain samples of one OFDM symbol, with or without cyclic prefix.

    With a prefix the first ``guard_len`` samples replicate the symbol tail
    (exactly, before any windowing) and the total length is
    ``n_fft + guard_len``; without one, length is ``n_fft`` and guard_len 0.
    """

    samples: np.ndarray
    n_fft: int
    guard_len: int = 0
    has_prefix: bool = False

    def __post_init__(self):
        self.samples = _as_signal(self.samples)
        if self.has_prefix:
            if self.guard_len < 0 or len(self.samples) != self.n_fft + self.guard_len:
                raise ValueError(
                    f"prefixed symbol must have n_fft+guard_len="
                    f"{self.n_fft + self.guard_len} samples, got {len(self.samples)}"
                )
        else:
            if self.guard_len != 0:
                raise ValueError("guard_len must be 0 for a symbol without prefix")
            if len(self.samples) != self.n_fft:
                raise ValueError(
                    f"symbol must have n_fft={self.n_fft} samples, got {len(self.samples)}"
                )


def idft_modulate(sym: FrequencyDomainSymbol) -> TimeDomainSymbol:
    """Modulate frequency-domain values onto subcarriers (no prefix).

    Returns x[n] = sum_k X_k exp(j2pi k n / N), i.e. N * ifft(X).
    """
    _check_fft_size(sym.n_fft)
    x = np.fft.ifft(sym.bins) * sym.n_fft
    return TimeDomainSymbol(x, n_fft=sym.n_fft)


def dft_demodulate(sym: TimeDomainSymbol) -> FrequencyDomainSymbol:
    """Recover X_k = (1/N) sum_n x[n] exp(-j2pi k n / N); inverse of idft_modulate."""
    if sym.has_prefix:
        raise ValueError("remove the cyclic prefix before demodulating")
    _check_fft_size(sym.n_fft)
    bins = np.fft.fft(sym.samples) / sym.n_fft
    return FrequencyDomainSymbol(bins, n_fft=sym.n_fft)


def add_cyclic_prefix(sym: TimeDomainSymbol, guard_len: int) -> TimeDomainSymbol:
    """Prepend the last ``guard_len`` samples of the symbol as a guard interval."""
    if sym.has_prefix:
        raise ValueError("symbol already has a cyclic prefix")
    if guard_len < 0 or guard_len > sym.n_fft:
        raise ValueError(
            f"guard_len must be in [0, n_fft={sym.n_fft}], got {guard_len}"
        )
    if guard_len == 0:
        return TimeDomainSymbol(sym.samples.copy(), n_fft=sym.n_fft)
    out = np.concatenate([sym.samples[-guard_len:], sym.samples])
    return TimeDomainSymbol(out, n_fft=sym.n_fft, guard_len=guard_len, has_prefix=True)


def remove_cyclic_prefix(sym: TimeDomainSymbol) -> TimeDomainSymbol:
    """Drop the guard interval, leaving the n_fft useful samples."""
    if not sym.has_prefix:
        raise ValueError("symbol has no cyclic prefix to remove")
    return TimeDomainSymbol(sym.samples[sym.guard_len:], n_fft=sym.n_fft)


def raised_cosine_taper(rolloff_samples: int) -> np.ndarray:
    """Rising raised-cosine edge taper w(i) = 0.5*(1 - cos(pi*(i+0.5)/R))."""
    i = np.arange(rolloff_samples)
    return 0.5 * (1.0 - np.cos(np.pi * (i + 0.5) / rolloff_samples))


def apply_window(sym: TimeDomainSymbol, rolloff_samples: int) -> TimeDomainSymbol:
    """Taper the first and last ``rolloff_samples`` of the symbol.

    Rolloff 0 is the identity.  The taper may only eat into the guard
    interval, so rolloff > guard_len is rejected.
    """
    if rolloff_samples < 0 or rolloff_samples > sym.guard_len:
        raise ValueError(
            f"rolloff must be in [0, guard_len={sym.guard_len}], got {rolloff_samples}"
        )
    if rolloff_samples == 0:
        return TimeDomainSymbol(
            sym.samples.copy(), sym.n_fft, sym.guard_len, sym.has_prefix
        )
    w = raised_cosine_taper(rolloff_samples)
    out = sym.samples.copy()
    out[:rolloff_samples] *= w
    out[-rolloff_samples:] *= w[::-1]
    return TimeDomainSymbol(out, sym.n_fft, sym.guard_len, sym.has_prefix)


def concatenate_symbols(symbols) -> np.ndarray:
    """Abut a sequence of equally-sized symbols into one sample stream."""
    symbols = list(symbols)
    if not symbols:
        raise ValueError("no symbols to concatenate")
    n_fft, guard = symbols[0].n_fft, symbols[0].guard_len
    for s in symbols:
        if s.n_fft != n_fft or s.guard_len != guard:
            raise ValueError(
                f"mixed symbol sizes: ({s.n_fft},{s.guard_len}) vs ({n_fft},{guard})"
            )
    return np.concatenate([s.samples for s in symbols])


def papr_db(samples) -> float:
    """Peak-to-average power ratio, 10*log10(max|x|^2 / mean|x|^2), in dB."""
    x = _as_signal(samples)
    if len(x) == 0:
        raise ValueError("PAPR undefined for an empty signal")
    p = np.abs(x) ** 2
    mean = p.mean()
    if mean == 0.0:
        raise ValueError("PAPR undefined for an all-zero signal")
    return float(10.0 * np.log10(p.max() / mean))
