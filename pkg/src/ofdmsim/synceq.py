"""Receiver-side estimation: timing, CFO, channel response, pilot phase.

The preamble layout is: a short part of 10 repetitions of an N/4-sample
block (QPSK on every 4th subcarrier, boosted 2x so its power matches the
data symbols), then a 2*guard cyclic extension, then two identical known
full training symbols (BPSK on all used subcarriers).  The training
sequences are drawn once from fixed Philox seeds, so every build of the
same profile gets the same preamble.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

from ofdmsim.mapping import QPSK
from ofdmsim.signal_core import FrequencyDomainSymbol, idft_modulate
from ofdmsim.channel import make_rng


class SyncError(RuntimeError):
    """Raised when a timing/CFO/channel estimate cannot be formed."""


_SHORT_SEED = 0x0FD5_0001
_LONG_SEED = 0x0FD5_0002


@dataclass
class Preamble:
    """Known training prefix: short repetitions plus two long symbols."""

    n_fft: int
    guard_len: int
    short_part: np.ndarray   # 10 repetitions of an n_fft/4 block
    long_guard: np.ndarray   # 2*guard_len cyclic extension of the long symbol
    long_symbol: np.ndarray  # one known training symbol, length n_fft
    train_bins: np.ndarray   # its frequency-domain values (X_train)
    used_bins: np.ndarray

    @property
    def short_len(self) -> int:
        return len(self.short_part)

    @property
    def long_start(self) -> int:
        """Offset of the first long training symbol within the preamble."""
        return self.short_len + len(self.long_guard)

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate(
            [self.short_part, self.long_guard, self.long_symbol, self.long_symbol]
        )

    def __len__(self) -> int:
        return self.short_len + len(self.long_guard) + 2 * self.n_fft


def make_preamble(n_fft: int, guard_len: int, used_bins) -> Preamble:
    """Build the deterministic preamble for one profile numerology."""
    used_bins = np.asarray(used_bins, dtype=np.int64)
    if len(used_bins) == 0:
        raise ValueError("profile has no used subcarriers")

    short_bins = np.zeros(n_fft, dtype=np.complex128)
    quarter_tones = used_bins[used_bins % 4 == 0]
    rng = make_rng(_SHORT_SEED)
    labels = rng.integers(0, 4, len(quarter_tones))
    short_bins[quarter_tones] = 2.0 * QPSK.points[labels]
    short_sym = idft_modulate(FrequencyDomainSymbol(short_bins, n_fft)).samples
    block = short_sym[: n_fft // 4]  # quarter-spaced tones make it N/4-periodic
    short_part = np.tile(block, 10)

    train_bins = np.zeros(n_fft, dtype=np.complex128)
    rng = make_rng(_LONG_SEED)
    train_bins[used_bins] = 2.0 * rng.integers(0, 2, len(used_bins)) - 1.0
    long_symbol = idft_modulate(FrequencyDomainSymbol(train_bins, n_fft)).samples
    long_guard = long_symbol[-2 * guard_len:] if guard_len > 0 else long_symbol[:0]

    return Preamble(
        n_fft=n_fft,
        guard_len=guard_len,
        short_part=short_part,
        long_guard=long_guard,
        long_symbol=long_symbol,
        train_bins=train_bins,
        used_bins=used_bins,
    )


def _normalized_correlation(rx: np.ndarray, template: np.ndarray) -> np.ndarray:
    """|cross-correlation| / (window norm * template norm) at every lag."""
    n = len(template)
    num = np.abs(sp_signal.correlate(rx, template, mode="valid", method="auto"))
    power = np.concatenate([[0.0], np.cumsum(np.abs(rx) ** 2)])
    win_energy = power[n:] - power[:-n]
    denom = np.sqrt(np.maximum(win_energy, 1e-300)) * np.linalg.norm(template)
    return num / denom


def estimate_timing(rx, preamble: Preamble, threshold: float = 0.5) -> int:
    """Locate the preamble start by correlating with the long training symbol.

    The correlation magnitudes at the two known repetition positions are
    combined, which keeps a single unambiguous peak; the result is exact on
    clean signals.  Raises SyncError when the best peak stays below
    ``threshold`` (1.0 = perfect match).
    """
    rx = np.asarray(rx, dtype=np.complex128)
    n = preamble.n_fft
    if len(rx) < len(preamble):
        raise SyncError("received stream shorter than the preamble")
    nc = _normalized_correlation(rx, preamble.long_symbol)
    second = np.zeros_like(nc)
    second[: len(nc) - n] = nc[n:]
    metric = 0.5 * (nc + second)
    peak = int(np.argmax(metric))
    if metric[peak] < threshold:
        raise SyncError(
            f"no preamble found: best correlation {metric[peak]:.3f} < {threshold}"
        )
    return peak - preamble.long_start


def estimate_cfo(rx, preamble: Preamble, start: int) -> float:
    """Carrier offset (fraction of subcarrier spacing) from the repeated
    long symbols: angle(sum conj(r[n]) * r[n+N]) / (2*pi), unambiguous for
    |cfo| < 0.5.
    """
    rx = np.asarray(rx, dtype=np.complex128)
    n = preamble.n_fft
    t = start + preamble.long_start
    if t < 0 or t + 2 * n > len(rx):
        raise SyncError("long training symbols fall outside the received stream")
    w0 = rx[t: t + n]
    w1 = rx[t + n: t + 2 * n]
    acc = np.sum(np.conj(w0) * w1)
    if np.abs(acc) == 0.0:
        raise SyncError("degenerate (zero-energy) CFO correlation")
    return float(np.angle(acc) / (2.0 * np.pi))


@dataclass
class ChannelEstimate:
    """Per-subcarrier response on the used bins (zero elsewhere)."""

    h: np.ndarray
    used_bins: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.h[self.used_bins])):
            raise ValueError("channel estimate contains non-finite entries")


def estimate_channel(rx_train_bins, train_bins, used_bins) -> ChannelEstimate:
    """Least-squares estimate H_k = mean_m Y_mk / X_k over training symbols."""
    y = np.atleast_2d(np.asarray(rx_train_bins, dtype=np.complex128))
    x = np.asarray(train_bins, dtype=np.complex128)
    used_bins = np.asarray(used_bins, dtype=np.int64)
    if np.any(x[used_bins] == 0):
        raise ValueError("training symbol is zero on a used subcarrier")
    h = np.zeros(y.shape[1], dtype=np.complex128)
    h[used_bins] = (y[:, used_bins] / x[used_bins]).mean(axis=0)
    return ChannelEstimate(h=h, used_bins=used_bins)


# Bins with |H| below this fraction of the strongest used bin are erased
# instead of divided, so a spectral null cannot blow up the equalizer.
ERASURE_FLOOR_RATIO = 1e-6


def equalize(bins, est: ChannelEstimate):
    """One-tap zero-forcing Y_k / H_k on the used bins.

    Returns (equalized bins, erased mask over all bins); erased bins are set
    to zero and their bit metrics should be ignored downstream.
    """
    y = np.asarray(bins, dtype=np.complex128)
    out = y.copy()
    erased = np.zeros(len(y), dtype=bool)
    used = est.used_bins
    floor = ERASURE_FLOOR_RATIO * np.max(np.abs(est.h[used]))
    bad = np.abs(est.h[used]) < floor
    good = used[~bad]
    out[good] = y[good] / est.h[good]
    out[used[bad]] = 0.0
    erased[used[bad]] = True
    return out, erased


def track_pilot_phase(bins, est: ChannelEstimate, pilot_bins, pilot_values,
                      erased=None):
    """Estimate and remove the common phase rotation seen on the pilots.

    theta = angle(sum_p Y_p * conj(P_p * H_p)) measured on the raw (not yet
    equalized) symbol; the whole symbol is rotated by exp(-j*theta).
    Returns (corrected bins, theta, tracked).  When every pilot is erased
    the symbol passes through unchanged with tracked=False.
    """
    y = np.asarray(bins, dtype=np.complex128)
    pilot_bins = np.asarray(pilot_bins, dtype=np.int64)
    if len(pilot_bins) == 0:
        return y.copy(), 0.0, False
    pilot_values = np.asarray(pilot_values, dtype=np.complex128)
    if erased is not None:
        keep = ~np.asarray(erased, dtype=bool)[pilot_bins]
        pilot_bins, pilot_values = pilot_bins[keep], pilot_values[keep]
    if len(pilot_bins) == 0:
        return y.copy(), 0.0, False
    acc = np.sum(y[pilot_bins] * np.conj(pilot_values * est.h[pilot_bins]))
    if np.abs(acc) == 0.0:
        return y.copy(), 0.0, False
    theta = float(np.angle(acc))
    return y * np.exp(-1j * theta), theta, True
