"""Standard numerologies and the end-to-end transmit/receive pipeline.

Profiles pin down everything the pipeline needs for one standard: transform
size, occupied subcarriers, pilot plan, guard length, timing, modulation,
code and interleaver shape.  ``transceive`` then runs bits through encode ->
interleave -> map -> IDFT -> cyclic prefix -> window -> channel -> sync ->
equalize -> demap -> decode and reports error counters.

Subcarrier bookkeeping uses logical indices (negative = below the carrier,
DC = 0) stored as natural FFT bin numbers.  Guard sample counts for the DAB
modes are round-half-up of guard_time * n_fft * spacing.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ofdmsim import coding, mapping, signal_core, synceq
from ofdmsim.channel import ChannelSpec, apply_channel, make_rng
from ofdmsim.coding import ConvCode, RATE_HALF_K7, RATE_QUARTER_K7
from ofdmsim.mapping import DqpskReference
from ofdmsim.signal_core import FrequencyDomainSymbol, TimeDomainSymbol

_DAB_REFERENCE_SEED = 0x0FD5_0003
_PAD_SEED = 0x0FD5_0004


def _centered_bins(n_fft: int, n_used: int) -> np.ndarray:
    """Natural FFT indices of n_used subcarriers centered on DC.

    Even counts straddle DC (logical +-1..+-n/2); odd counts include it.
    Returned in ascending logical order.
    """
    if n_used < 1 or n_used >= n_fft:
        raise ValueError(f"cannot place {n_used} used subcarriers in {n_fft} bins")
    half = n_used // 2
    if n_used % 2:
        logical = np.arange(-half, half + 1)
    else:
        logical = np.concatenate([np.arange(-half, 0), np.arange(1, half + 1)])
    return logical % n_fft


@dataclass
class OfdmProfile:
    """All numerology of one transmission standard."""

    name: str
    n_fft: int
    used_bins: np.ndarray
    data_bins: np.ndarray
    pilot_bins: np.ndarray
    pilot_values: np.ndarray
    guard_len: int
    subcarrier_spacing: float
    guard_time: float
    symbol_time: float
    modulation: str
    code: ConvCode
    interleaver_dims: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        used = set(self.used_bins.tolist())
        pilots = set(self.pilot_bins.tolist())
        data = set(self.data_bins.tolist())
        if len(used) > self.n_fft:
            raise ValueError("more used subcarriers than FFT bins")
        if not pilots <= used or not data <= used or pilots & data:
            raise ValueError("pilot/data bins must partition the used set")
        if self.symbol_time - self.guard_time != 1.0 / self.subcarrier_spacing:
            raise ValueError("symbol_time - guard_time must equal 1/spacing")
        rows, cols = self.interleaver_dims
        if rows * cols != self.coded_bits_per_symbol:
            raise ValueError("interleaver block must cover one symbol of coded bits")

    @property
    def n_used(self) -> int:
        return len(self.used_bins)

    @property
    def n_data(self) -> int:
        return len(self.data_bins)

    @property
    def bits_per_subcarrier(self) -> int:
        if self.modulation == "dqpsk":
            return 2
        return mapping.constellation(self.modulation).bits_per_symbol

    @property
    def coded_bits_per_symbol(self) -> int:
        return self.n_data * self.bits_per_subcarrier

    @property
    def symbol_len(self) -> int:
        return self.n_fft + self.guard_len

    @property
    def sample_rate(self) -> float:
        return self.n_fft * self.subcarrier_spacing

    def interleaver(self) -> coding.Interleaver:
        return coding.Interleaver.row_column(*self.interleaver_dims)

    def preamble(self) -> synceq.Preamble:
        return synceq.make_preamble(self.n_fft, self.guard_len, self.used_bins)


def profile_80211a(modulation: str = "qpsk") -> OfdmProfile:
    """The 802.11a-style profile: 64-point transform, 48 data + 4 pilot
    subcarriers, 16-sample guard, rate-1/2 K=7 code."""
    n_fft, guard = 64, 16
    spacing = 20e6 / n_fft
    used = _centered_bins(n_fft, 52)
    pilots = np.array([-21, -7, 7, 21]) % n_fft
    data = np.array([b for b in used if b not in set(pilots.tolist())])
    bits = mapping.constellation(modulation).bits_per_symbol
    return OfdmProfile(
        name="80211a",
        n_fft=n_fft,
        used_bins=used,
        data_bins=data,
        pilot_bins=pilots,
        pilot_values=np.ones(4, dtype=np.complex128),
        guard_len=guard,
        subcarrier_spacing=spacing,
        guard_time=guard / (n_fft * spacing),
        symbol_time=guard / (n_fft * spacing) + 1.0 / spacing,
        modulation=modulation,
        code=RATE_HALF_K7,
        interleaver_dims=(bits, 48),
    )


# Printed DAB transmission-mode parameters (mode -> carriers, spacing [Hz],
# symbol time [s], guard time [s], max carrier frequency [Hz], max
# transmitter separation [m]).
DAB_MODE_PARAMETERS = {
    1: (1536, 1e3, 1.246e-3, 246e-6, 375e6, 96e3),
    2: (384, 4e3, 311.5e-6, 61.5e-6, 1.5e9, 24e3),
    3: (192, 8e3, 155.8e-6, 30.8e-6, 3e9, 12e3),
    4: (768, 2e3, 623e-6, 123e-6, 1.5e9, 48e3),
}

_DAB_FFT = {1536: 2048, 384: 512, 192: 256, 768: 1024}


def profile_dab(mode: int) -> OfdmProfile:
    """DAB transmission mode I-IV: DQPSK subcarriers, rate-1/4 K=7 code.

    Carrier counts are realized inside the next power-of-two transform and
    the printed guard time becomes round-half-up(guard_time * sample_rate)
    samples.
    """
    if mode not in DAB_MODE_PARAMETERS:
        raise ValueError(f"DAB mode must be 1..4, got {mode}")
    carriers, spacing, symbol_time, guard_time, fmax, sep = DAB_MODE_PARAMETERS[mode]
    n_fft = _DAB_FFT[carriers]
    guard_len = math.floor(guard_time * n_fft * spacing + 0.5)
    used = _centered_bins(n_fft, carriers)
    return OfdmProfile(
        name=f"dab-{mode}",
        n_fft=n_fft,
        used_bins=used,
        data_bins=used,
        pilot_bins=np.array([], dtype=np.int64),
        pilot_values=np.array([], dtype=np.complex128),
        guard_len=guard_len,
        subcarrier_spacing=spacing,
        guard_time=guard_time,
        symbol_time=symbol_time,
        modulation="dqpsk",
        code=RATE_QUARTER_K7,
        interleaver_dims=(2, carriers),
        metadata={
            "mode": mode,
            "carriers": carriers,
            "carrier_freq_max_hz": fmax,
            "transmitter_separation_max_m": sep,
        },
    )


_DVBH_FFT = {"2k": 2048, "4k": 4096, "8k": 8192}
_DVBH_CARRIERS = {"2k": 1705, "4k": 3409, "8k": 6817}
_DVBH_GUARD_RATIOS = (0.25, 0.125, 0.0625, 0.03125)


def profile_dvbh(mode: str, bandwidth_mhz: int = 8, guard_ratio: float = 0.25,
                 modulation: str = "qam16", mpe_fec: bool = False) -> OfdmProfile:
    """DVB-H 2K/4K/8K mode on a 5/6/7/8 MHz channel.

    Subcarrier spacing is bandwidth/n_fft and the guard length a
    configurable 1/4..1/32 of the transform.  The optional MPE-FEC stage is
    carried as a metadata flag only.
    """
    key = str(mode).lower()
    if key not in _DVBH_FFT:
        raise ValueError(f"DVB-H mode must be one of 2k/4k/8k, got {mode!r}")
    if bandwidth_mhz not in (5, 6, 7, 8):
        raise ValueError(f"bandwidth must be 5, 6, 7 or 8 MHz, got {bandwidth_mhz}")
    if guard_ratio not in _DVBH_GUARD_RATIOS:
        raise ValueError("guard ratio must be one of 1/4, 1/8, 1/16, 1/32")
    n_fft = _DVBH_FFT[key]
    carriers = _DVBH_CARRIERS[key]
    spacing = bandwidth_mhz * 1e6 / n_fft
    guard_len = int(n_fft * guard_ratio)
    used = _centered_bins(n_fft, carriers)
    bits = mapping.constellation(modulation).bits_per_symbol
    return OfdmProfile(
        name=f"dvbh-{key}",
        n_fft=n_fft,
        used_bins=used,
        data_bins=used,
        pilot_bins=np.array([], dtype=np.int64),
        pilot_values=np.array([], dtype=np.complex128),
        guard_len=guard_len,
        subcarrier_spacing=spacing,
        guard_time=guard_len / (n_fft * spacing),
        symbol_time=guard_len / (n_fft * spacing) + 1.0 / spacing,
        modulation=modulation,
        code=RATE_HALF_K7,
        interleaver_dims=(bits, carriers),
        metadata={
            "mode": key,
            "bandwidth_mhz": bandwidth_mhz,
            "guard_ratio": guard_ratio,
            "mpe_fec": mpe_fec,
        },
    )


def get_profile(name: str, **kwargs) -> OfdmProfile:
    """Profile lookup by CLI name: 80211a, dab-1..dab-4, dvbh-2k/4k/8k."""
    key = name.lower()
    if key == "80211a":
        return profile_80211a(**kwargs)
    if key.startswith("dab-"):
        return profile_dab(int(key[4:]), **kwargs)
    if key.startswith("dvbh-"):
        return profile_dvbh(key[5:], **kwargs)
    raise ValueError(f"unknown profile: {name!r}")


PROFILE_NAMES = ("80211a", "dab-1", "dab-2", "dab-3", "dab-4",
                 "dvbh-2k", "dvbh-4k", "dvbh-8k")


# --- time slicing -------------------------------------------------------------

@dataclass(frozen=True)
class TimeSliceSpec:
    """Burst transmission cycle for receiver power saving."""

    burst_duration: float
    cycle_period: float
    wakeup_overhead: float = 0.0

    def __post_init__(self):
        if not 0 < self.burst_duration <= self.cycle_period:
            raise ValueError("need 0 < burst_duration <= cycle_period")
        if self.wakeup_overhead < 0:
            raise ValueError("wakeup_overhead must be >= 0")


def timeslice_power_saving(spec: TimeSliceSpec) -> float:
    """Fraction of receiver on-time saved: 1 - min(1, (burst+overhead)/cycle)."""
    duty = (spec.burst_duration + spec.wakeup_overhead) / spec.cycle_period
    return 1.0 - min(1.0, duty)


# --- symbol assembly ----------------------------------------------------------

def _assemble_symbol(profile: OfdmProfile, data_values: np.ndarray,
                     window_rolloff: int) -> TimeDomainSymbol:
    """One transmit symbol: data+pilots -> IDFT -> CP -> edge taper."""
    bins = np.zeros(profile.n_fft, dtype=np.complex128)
    bins[profile.data_bins] = data_values
    if len(profile.pilot_bins):
        bins[profile.pilot_bins] = profile.pilot_values
    sym = signal_core.idft_modulate(FrequencyDomainSymbol(bins, profile.n_fft))
    sym = signal_core.add_cyclic_prefix(sym, profile.guard_len)
    if window_rolloff:
        sym = signal_core.apply_window(sym, window_rolloff)
    return sym


def dqpsk_reference_values(profile: OfdmProfile) -> np.ndarray:
    """Deterministic unit-modulus phase reference for differential profiles."""
    rng = make_rng(_DAB_REFERENCE_SEED)
    labels = rng.integers(0, 4, profile.n_data)
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * labels))


def _pad_payload(n_bits: int, profile: OfdmProfile, coded: bool) -> int:
    """Pad count appended so the (coded) stream fills whole symbols.

    Padding uses a fixed pseudo-random fill (not zeros: a constant fill
    loads every carrier identically and turns the tail symbol into a
    time-domain impulse, skewing PAPR statistics).  Decoded output is
    truncated back to the caller's length.
    """
    cbps = profile.coded_bits_per_symbol
    if coded:
        per_symbol = cbps // profile.code.n_out
        flush = profile.code.constraint_len - 1
        return (-(n_bits + flush)) % per_symbol
    return (-n_bits) % cbps


# --- transceive ---------------------------------------------------------------

@dataclass
class MetricsRecord:
    """Counters from one transceive run."""

    n_bits: int
    bit_errors: int
    n_symbols: int
    papr_db: float
    symbol_paprs_db: np.ndarray
    snr_est_db: float
    timing_est: int
    cfo_est: float

    @property
    def ber(self) -> float:
        return self.bit_errors / self.n_bits if self.n_bits else 0.0


def _tx_waveform(bits: np.ndarray, profile: OfdmProfile, coded: bool,
                 window_rolloff: int):
    """Encode/map the payload; returns (stream, preamble, n_symbols, paprs)."""
    cbps = profile.coded_bits_per_symbol
    pad = _pad_payload(len(bits), profile, coded)
    fill = make_rng(_PAD_SEED).integers(0, 2, pad).astype(bits.dtype)
    payload = np.concatenate([bits, fill])
    coded_bits = coding.conv_encode(payload, profile.code) if coded else payload
    n_symbols = len(coded_bits) // cbps
    il = profile.interleaver()
    blocks = [
        coding.interleave(coded_bits[i * cbps:(i + 1) * cbps], il)
        for i in range(n_symbols)
    ]

    symbols = []
    if profile.modulation == "dqpsk":
        ref_values = dqpsk_reference_values(profile)
        symbols.append(_assemble_symbol(profile, ref_values, window_rolloff))
        values = mapping.dqpsk_encode(np.concatenate(blocks),
                                      DqpskReference(ref_values))
        for t in range(n_symbols):
            symbols.append(_assemble_symbol(profile, values[t], window_rolloff))
    else:
        const = mapping.constellation(profile.modulation)
        for block in blocks:
            symbols.append(
                _assemble_symbol(profile, mapping.map_bits(block, const),
                                 window_rolloff)
            )

    preamble = profile.preamble()
    stream = np.concatenate(
        [preamble.samples, signal_core.concatenate_symbols(symbols)]
    )
    paprs = np.array([signal_core.papr_db(s.samples) for s in symbols])
    return stream, preamble, n_symbols, paprs


def transceive(bits, profile: OfdmProfile, channel: ChannelSpec = None, *,
               coded: bool = True, window_rolloff: int = 0,
               sync: str = "estimate"):
    """Run bits end to end through one profile and an impaired channel.

    sync="estimate" recovers timing/CFO/channel from the preamble;
    sync="oracle" takes them from the ChannelSpec (analytic tap response),
    the reference mode for ideal-channel-knowledge experiments.  Returns
    (decoded bits, MetricsRecord); synchronization failures raise SyncError.
    """
    if sync not in ("estimate", "oracle"):
        raise ValueError(f"sync must be 'estimate' or 'oracle', got {sync!r}")
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if len(bits) == 0:
        raise ValueError("no payload bits")
    if channel is None:
        channel = ChannelSpec()

    stream, preamble, n_symbols, sym_paprs = _tx_waveform(
        bits, profile, coded, window_rolloff
    )
    rx = apply_channel(stream, channel, profile.n_fft)

    n, guard = profile.n_fft, profile.guard_len
    if sync == "oracle":
        t0 = channel.timing_offset
        cfo_est = float(channel.cfo_fraction)
        backoff = 0
    else:
        t0 = synceq.estimate_timing(rx, preamble)
        cfo_est = synceq.estimate_cfo(rx, preamble, t0)
        backoff = guard // 2
    if cfo_est != 0.0:
        rx = rx * np.exp(-2j * np.pi * cfo_est * np.arange(len(rx)) / n)

    def fd_window(start: int) -> np.ndarray:
        if start < 0 or start + n > len(rx):
            raise synceq.SyncError("symbol window outside the received stream")
        sym = TimeDomainSymbol(rx[start:start + n], n_fft=n)
        return signal_core.dft_demodulate(sym).bins

    if sync == "oracle":
        # analytic tap response plus the constant phase left by derotating a
        # time-shifted carrier offset
        h = channel.frequency_response(n) * np.exp(
            -2j * np.pi * channel.cfo_fraction * channel.timing_offset / n
        )
        est = synceq.ChannelEstimate(h=h, used_bins=preamble.used_bins)
    else:
        t_long = t0 + preamble.long_start
        trains = [fd_window(t_long - backoff), fd_window(t_long + n - backoff)]
        est = synceq.estimate_channel(trains, preamble.train_bins,
                                      preamble.used_bins)

    il = profile.interleaver()
    cbps = profile.coded_bits_per_symbol
    base = t0 + len(preamble)
    extra = 1 if profile.modulation == "dqpsk" else 0
    sym_bins = [
        fd_window(base + m * profile.symbol_len + guard - backoff)
        for m in range(n_symbols + extra)
    ]

    soft_points = []
    decided_points = []
    if profile.modulation == "dqpsk":
        raw = np.array([b[profile.data_bins] for b in sym_bins])
        ref_rx = raw[0]
        mags = np.abs(ref_rx)
        ref = DqpskReference(
            np.where(mags > 0, ref_rx / np.where(mags > 0, mags, 1.0), 1.0)
        )
        rx_bits = mapping.dqpsk_decode(raw[1:], ref)
        metric_blocks = [
            2.0 * rx_bits[m * cbps:(m + 1) * cbps] - 1.0 for m in range(n_symbols)
        ]
        prods = (raw[1:] * np.conj(np.vstack([ref_rx[None, :], raw[1:-1]]))).ravel()
        pm = np.abs(prods)
        u = np.where(pm > 0, prods / np.where(pm > 0, pm, 1.0), 1.0)
        soft_points.append(u)
        quad = np.round((np.angle(u) - np.pi / 4) / (np.pi / 2))
        decided_points.append(np.exp(1j * (np.pi / 4 + np.pi / 2 * quad)))
    else:
        const = mapping.constellation(profile.modulation)
        metric_blocks = []
        for b in sym_bins:
            if sync == "estimate":
                # oracle knowledge leaves no residual phase to track, and a
                # 4-pilot estimate would only inject its own noise
                b, theta, _ = synceq.track_pilot_phase(
                    b, est, profile.pilot_bins, profile.pilot_values
                )
            eq, erased = synceq.equalize(b, est)
            z = eq[profile.data_bins]
            llrs = mapping.demap_soft(z, const, 1.0)
            bad = np.repeat(erased[profile.data_bins], const.bits_per_symbol)
            llrs[bad] = 0.0  # erased subcarriers carry no bit information
            metric_blocks.append(llrs)
            keep = ~erased[profile.data_bins]
            zk = z[keep]
            soft_points.append(zk)
            decided_points.append(
                const.points[mapping.bits_to_labels(
                    mapping.demap_hard(zk, const), const.bits_per_symbol)]
            )

    metrics = np.concatenate([coding.deinterleave(b, il) for b in metric_blocks])
    if coded:
        decoded = coding.viterbi_decode(metrics, profile.code)
    else:
        decoded = (metrics > 0).astype(np.uint8)
    decoded = decoded[:len(bits)]
    errors = int(np.sum(decoded != bits))

    zs = np.concatenate(soft_points)
    ds = np.concatenate(decided_points)
    mse = float(np.mean(np.abs(zs - ds) ** 2)) if len(zs) else 0.0
    snr_est = math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)

    record = MetricsRecord(
        n_bits=len(bits),
        bit_errors=errors,
        n_symbols=n_symbols,
        papr_db=signal_core.papr_db(stream),
        symbol_paprs_db=sym_paprs,
        snr_est_db=snr_est,
        timing_est=int(t0),
        cfo_est=float(cfo_est),
    )
    return decoded, record


# --- DAB framing ----------------------------------------------------------------

@dataclass
class DabFrame:
    """One DAB transmission frame: null symbol, phase reference, data."""

    profile: OfdmProfile
    null_symbol: np.ndarray
    reference_symbol: np.ndarray
    data_symbols: list
    reference_values: np.ndarray

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate(
            [self.null_symbol, self.reference_symbol] + list(self.data_symbols)
        )

    @property
    def duration_s(self) -> float:
        return (2 + len(self.data_symbols)) * self.profile.symbol_time


def build_dab_frame(bits, profile: OfdmProfile, ref_values=None) -> DabFrame:
    """Assemble null + reference + DQPSK data symbols for a DAB profile.

    The coded payload must fill whole OFDM symbols exactly; partial symbols
    are rejected (transceive's zero-padding rule does not apply here).
    """
    if profile.modulation != "dqpsk":
        raise ValueError("DAB framing requires a DQPSK profile")
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    cbps = profile.coded_bits_per_symbol
    coded = coding.conv_encode(bits, profile.code)
    if len(coded) == 0 or len(coded) % cbps != 0:
        raise ValueError(
            f"coded length {len(coded)} does not fill whole symbols of "
            f"{cbps} bits; pad the payload first"
        )
    il = profile.interleaver()
    n_symbols = len(coded) // cbps
    blocks = np.concatenate(
        [coding.interleave(coded[i * cbps:(i + 1) * cbps], il)
         for i in range(n_symbols)]
    )
    if ref_values is None:
        ref_values = dqpsk_reference_values(profile)
    ref_values = np.asarray(ref_values, dtype=np.complex128)

    ref_sym = _assemble_symbol(profile, ref_values, 0)
    values = mapping.dqpsk_encode(blocks, DqpskReference(ref_values))
    data = [_assemble_symbol(profile, values[t], 0).samples
            for t in range(n_symbols)]
    return DabFrame(
        profile=profile,
        null_symbol=np.zeros(profile.symbol_len, dtype=np.complex128),
        reference_symbol=ref_sym.samples,
        data_symbols=data,
        reference_values=ref_values,
    )


def detect_null_symbol(samples, profile: OfdmProfile,
                       threshold_ratio: float = 0.5) -> int:
    """Frame start = index minimizing a sliding one-symbol energy window.

    Raises SyncError when no window drops below threshold_ratio times the
    stream's mean window energy (i.e. there is no plausible null).
    """
    x = np.asarray(samples, dtype=np.complex128)
    w = profile.symbol_len
    if len(x) < w:
        raise synceq.SyncError("stream shorter than one symbol")
    p = np.concatenate([[0.0], np.cumsum(np.abs(x) ** 2)])
    energy = p[w:] - p[:-w]
    idx = int(np.argmin(energy))
    if energy[idx] > threshold_ratio * float(np.mean(energy)):
        raise synceq.SyncError("no null symbol found in the stream")
    return idx


def decode_dab_frame(samples, profile: OfdmProfile) -> np.ndarray:
    """Locate a DAB frame by its null symbol and decode the payload bits."""
    x = np.asarray(samples, dtype=np.complex128)
    start = detect_null_symbol(x, profile)
    n, guard, step = profile.n_fft, profile.guard_len, profile.symbol_len
    first = start + step  # reference symbol position
    n_symbols = (len(x) - first) // step - 1
    if n_symbols < 1:
        raise synceq.SyncError("no data symbols after the reference symbol")

    def data_bins_at(pos: int) -> np.ndarray:
        sym = TimeDomainSymbol(x[pos + guard: pos + guard + n], n_fft=n)
        return signal_core.dft_demodulate(sym).bins[profile.data_bins]

    ref_rx = data_bins_at(first)
    mags = np.abs(ref_rx)
    ref = DqpskReference(
        np.where(mags > 0, ref_rx / np.where(mags > 0, mags, 1.0), 1.0)
    )
    raw = np.array([data_bins_at(first + (1 + t) * step) for t in range(n_symbols)])
    rx_bits = mapping.dqpsk_decode(raw, ref)

    il = profile.interleaver()
    cbps = profile.coded_bits_per_symbol
    deint = np.concatenate(
        [coding.deinterleave(rx_bits[t * cbps:(t + 1) * cbps], il)
         for t in range(n_symbols)]
    )
    return coding.viterbi_decode_hard(deint, profile.code)
