"""Batch measurement front end: BER sweeps, PAPR CCDF, spectrum estimates.

Every run is a pure function of (config, seed).  Per-point and per-chunk
random streams are derived with SeedSequence tuples (seed, point, chunk), so
sweep points could run concurrently without changing a byte of the output.
Wall-clock timing is only recorded into output records when explicitly
requested, keeping default artifacts byte-identical across reruns.
"""

import csv
import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import signal as sp_signal

from ofdmsim import mapping, signal_core
from ofdmsim.channel import ChannelSpec, make_rng
from ofdmsim.signal_core import FrequencyDomainSymbol
from ofdmsim.mapping import DqpskReference
from ofdmsim.profiles import (
    OfdmProfile,
    get_profile,
    transceive,
    dqpsk_reference_values,
    _assemble_symbol,
)


class ConfigError(ValueError):
    """A harness configuration problem (bad profile, key or value)."""


_CHUNK_BITS = 20000  # payload bits per transceive call inside a sweep point


def build_profile(name: str, modulation=None) -> OfdmProfile:
    """Resolve a profile name plus optional modulation override."""
    try:
        profile = get_profile(name)
    except ValueError as exc:
        raise ConfigError(f"profile: {exc}") from None
    if modulation:
        if profile.modulation == "dqpsk":
            raise ConfigError(
                "modulation: DQPSK profiles do not take a modulation override"
            )
        if name.lower() == "80211a":
            return get_profile(name, modulation=modulation)
        return get_profile(name, modulation=modulation,
                           **{k: v for k, v in profile.metadata.items()
                              if k in ("bandwidth_mhz", "guard_ratio")})
    return profile


def ebn0_to_snr_db(ebn0_db: float, profile: OfdmProfile, coded: bool) -> float:
    """Convert an information-bit Eb/N0 into the time-domain channel SNR.

    Per-subcarrier Es/N0 equals channel SNR * n_fft/n_used (unit-power
    constellations; the guard copies data samples so it does not change the
    power); Es then spreads over bits_per_subcarrier * code_rate payload
    bits.
    """
    bits = profile.bits_per_subcarrier
    rate = 1.0 / profile.code.n_out if coded else 1.0
    es_n0_db = ebn0_db + 10.0 * math.log10(bits * rate)
    return es_n0_db - 10.0 * math.log10(profile.n_fft / profile.n_used)


def qfunc(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@dataclass
class SweepConfig:
    """One BER-vs-SNR measurement campaign."""

    profile: str = "80211a"
    modulation: str = None
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    min_bits: int = 10000
    max_errors: int = 100
    max_bits: int = None          # cap when errors never reach max_errors
    coded: bool = True
    sync: str = "estimate"
    snr_is_ebn0: bool = False     # interpret snr_db as information-bit Eb/N0
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    seed: int = 0
    timing: bool = False          # record wall-clock seconds into the records

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("snr_db: need at least one SNR point")
        if self.min_bits < 1:
            raise ConfigError("min_bits: must be positive")
        if self.max_errors < 1:
            raise ConfigError("max_errors: must be positive")
        if self.max_bits is None:
            self.max_bits = 10 * self.min_bits
        if self.max_bits < self.min_bits:
            raise ConfigError("max_bits: must be >= min_bits")
        if self.min_bits < 10000:
            warnings.warn(
                f"min_bits={self.min_bits} is below 10^4; BER estimates will "
                f"be statistically weak", stacklevel=2,
            )


@dataclass
class BerRecord:
    """One measured point of a BER sweep."""

    snr_db: float
    bits_simulated: int
    bit_errors: int
    ber: float
    papr_p99_db: float
    elapsed_s: float


def run_ber_sweep(cfg: SweepConfig) -> list:
    """Measure BER at every configured SNR point.

    A point keeps simulating chunks until it has at least min_bits and
    either max_errors errors were seen or max_bits is reached, so both the
    variance and the runtime stay bounded.  Records come back sorted by SNR.
    """
    profile = build_profile(cfg.profile, cfg.modulation)
    records = []
    for index, point in enumerate(sorted(cfg.snr_db)):
        channel_snr = (
            ebn0_to_snr_db(point, profile, cfg.coded) if cfg.snr_is_ebn0
            else float(point)
        )
        t_start = time.perf_counter()
        bits_done = 0
        errors = 0
        paprs = []
        chunk = 0
        while bits_done < cfg.min_bits or (
            errors < cfg.max_errors and bits_done < cfg.max_bits
        ):
            n_bits = min(_CHUNK_BITS, cfg.max_bits - bits_done)
            if bits_done < cfg.min_bits:
                n_bits = max(n_bits, min(_CHUNK_BITS, cfg.min_bits - bits_done))
            rng = make_rng((cfg.seed, index, chunk))
            payload = rng.integers(0, 2, n_bits).astype(np.uint8)
            spec = ChannelSpec(
                taps=cfg.channel.taps,
                snr_db=channel_snr,
                cfo_fraction=cfg.channel.cfo_fraction,
                timing_offset=cfg.channel.timing_offset,
                seed=(cfg.seed, index, chunk, 1),
            )
            _, metrics = transceive(
                payload, profile, spec, coded=cfg.coded, sync=cfg.sync
            )
            bits_done += metrics.n_bits
            errors += metrics.bit_errors
            paprs.append(metrics.symbol_paprs_db)
            chunk += 1
        ber = errors / bits_done
        if ber > 0 and bits_done < 100.0 / ber:
            warnings.warn(
                f"snr_db={point}: only {bits_done} bits for ber~{ber:.2e}; "
                f"fewer than 100 expected errors", stacklevel=2,
            )
        records.append(BerRecord(
            snr_db=float(point),
            bits_simulated=bits_done,
            bit_errors=errors,
            ber=ber,
            papr_p99_db=float(np.percentile(np.concatenate(paprs), 99)),
            elapsed_s=round(time.perf_counter() - t_start, 3) if cfg.timing else 0.0,
        ))
    return records


# --- PAPR CCDF ------------------------------------------------------------------

PAPR_THRESHOLDS_DB = tuple(np.arange(0.0, 13.25, 0.25))


@dataclass
class CcdfRecord:
    threshold_db: float
    exceedance_prob: float


def symbol_paprs(profile: OfdmProfile, n_symbols: int, seed: int) -> np.ndarray:
    """Per-symbol PAPR (dB) of random payload symbols, guard included."""
    rng = make_rng((seed, 0x9A92, 0))
    cbps = profile.coded_bits_per_symbol
    paprs = np.empty(n_symbols)
    if profile.modulation == "dqpsk":
        ref = DqpskReference(dqpsk_reference_values(profile))
        for i in range(n_symbols):
            bits = rng.integers(0, 2, cbps)
            values = mapping.dqpsk_encode(bits, ref)[0]
            paprs[i] = signal_core.papr_db(_assemble_symbol(profile, values, 0).samples)
    else:
        const = mapping.constellation(profile.modulation)
        for i in range(n_symbols):
            bits = rng.integers(0, 2, cbps)
            values = mapping.map_bits(bits, const)
            paprs[i] = signal_core.papr_db(_assemble_symbol(profile, values, 0).samples)
    return paprs


def run_papr_ccdf(profile_name: str, n_symbols: int, seed: int = 0,
                  modulation=None) -> list:
    """Empirical CCDF of per-symbol PAPR over random payloads."""
    if n_symbols < 1000:
        raise ConfigError("n_symbols: need at least 1000 symbols for a CCDF")
    profile = build_profile(profile_name, modulation)
    paprs = symbol_paprs(profile, n_symbols, seed)
    return [
        CcdfRecord(threshold_db=float(t),
                   exceedance_prob=float(np.mean(paprs > t)))
        for t in PAPR_THRESHOLDS_DB
    ]


# --- spectrum ---------------------------------------------------------------------

@dataclass
class SpectrumResult:
    """Welch periodogram of a concatenated symbol stream.

    freq is in subcarrier spacings relative to the carrier; psd_db is
    normalized to 0 dB at the average used-subcarrier level.  total_power
    and time_power allow a Parseval cross-check.
    """

    freq_subcarriers: np.ndarray
    psd_db: np.ndarray
    total_power: float
    time_power: float

    def records(self) -> list:
        return [
            {"freq_subcarriers": float(f), "psd_db": float(p)}
            for f, p in zip(self.freq_subcarriers, self.psd_db)
        ]


def run_spectrum(profile_name: str, windowed: bool, n_symbols: int,
                 seed: int = 0, modulation=None, oversample: int = 4) -> SpectrumResult:
    """Welch-averaged periodogram of a random data stream.

    The stream is rendered at ``oversample`` times the critical rate (same
    subcarriers inside a larger transform) so the out-of-band skirt is
    visible instead of aliasing against the Nyquist edge.  ``windowed``
    applies the raised-cosine edge taper at half the guard length, the
    testable form of time-domain symbol shaping.
    """
    if n_symbols < 100:
        raise ConfigError("n_symbols: need at least 100 symbols for a spectrum")
    if oversample < 1:
        raise ConfigError("oversample: must be >= 1")
    profile = build_profile(profile_name, modulation)
    n = profile.n_fft
    n_os = oversample * n
    guard_os = oversample * profile.guard_len
    rolloff = guard_os // 2 if windowed else 0
    logical = ((profile.used_bins + n // 2) % n) - n // 2
    data_os = (((profile.data_bins + n // 2) % n) - n // 2) % n_os
    pilot_os = (((profile.pilot_bins + n // 2) % n) - n // 2) % n_os

    def oversampled_symbol(values: np.ndarray) -> signal_core.TimeDomainSymbol:
        bins = np.zeros(n_os, dtype=np.complex128)
        bins[data_os] = values
        if len(pilot_os):
            bins[pilot_os] = profile.pilot_values
        sym = signal_core.idft_modulate(FrequencyDomainSymbol(bins, n_os))
        sym = signal_core.add_cyclic_prefix(sym, guard_os)
        return signal_core.apply_window(sym, rolloff) if rolloff else sym

    rng = make_rng((seed, 0x59EC, 0))
    cbps = profile.coded_bits_per_symbol
    symbols = []
    if profile.modulation == "dqpsk":
        ref = DqpskReference(dqpsk_reference_values(profile))
        values = mapping.dqpsk_encode(rng.integers(0, 2, cbps * n_symbols), ref)
        for i in range(n_symbols):
            symbols.append(oversampled_symbol(values[i]))
    else:
        const = mapping.constellation(profile.modulation)
        for i in range(n_symbols):
            values = mapping.map_bits(rng.integers(0, 2, cbps), const)
            symbols.append(oversampled_symbol(values))
    stream = signal_core.concatenate_symbols(symbols)

    nperseg = 4 * n_os
    freqs, psd = sp_signal.welch(
        stream, fs=float(n_os), window="blackmanharris", nperseg=nperseg,
        noverlap=nperseg // 2, detrend=False, return_onesided=False,
        scaling="density",
    )
    freqs = np.fft.fftshift(freqs)
    psd = np.fft.fftshift(psd)
    total_power = float(np.sum(psd) * n_os / nperseg)  # integrate density over fs
    time_power = float(np.mean(np.abs(stream) ** 2))

    centers = np.searchsorted(freqs, logical)
    ref_level = float(np.mean(psd[centers]))
    psd_db = 10.0 * np.log10(np.maximum(psd, 1e-300) / ref_level)
    return SpectrumResult(
        freq_subcarriers=freqs,
        psd_db=psd_db,
        total_power=total_power,
        time_power=time_power,
    )


# --- record serialization ---------------------------------------------------------

def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records: list) -> str:
    """Render records (dataclasses or dicts) as a deterministic CSV string."""
    rows = [asdict(r) if not isinstance(r, dict) else r for r in records]
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_value(row[k]) for k in header])
    return buf.getvalue()


def records_to_json(records: list) -> str:
    rows = [asdict(r) if not isinstance(r, dict) else r for r in records]
    return json.dumps(rows, indent=2) + "\n"


def write_records(records: list, path, fmt: str = "csv") -> str:
    """Serialize records to csv or json; write to ``path`` unless it is None.

    Returns the rendered text either way.
    """
    if fmt == "csv":
        text = records_to_csv(records)
    elif fmt == "json":
        text = records_to_json(records)
    else:
        raise ConfigError(f"format: must be csv or json, got {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
