"""Baseband OFDM physical-layer simulation library.

Submodules:

- ``signal_core``: IDFT/DFT symbol modulation, cyclic prefix, windowing, PAPR
- ``mapping``: Gray-labelled BPSK/QPSK/16-QAM/64-QAM and differential QPSK
- ``coding``: convolutional encoder, Viterbi decoder, block interleaving
- ``channel``: multipath / AWGN / CFO / timing impairments, seeded PRNG
- ``synceq``: preamble-based timing/CFO estimation, LS channel estimate,
  one-tap equalizer, pilot phase tracking
- ``profiles``: 802.11a-style, DAB (modes I-IV) and DVB-H (2K/4K/8K)
  numerologies plus the end-to-end ``transceive`` pipeline
- ``harness``: Monte Carlo BER sweeps, PAPR CCDF, spectrum estimation
- ``cli``: the ``ofdmsim`` command-line front end
"""

from ofdmsim.signal_core import (
    FrequencyDomainSymbol,
    TimeDomainSymbol,
    idft_modulate,
    dft_demodulate,
    add_cyclic_prefix,
    remove_cyclic_prefix,
    apply_window,
    concatenate_symbols,
    papr_db,
)
from ofdmsim.profiles import (
    OfdmProfile,
    profile_80211a,
    profile_dab,
    profile_dvbh,
    get_profile,
    transceive,
    timeslice_power_saving,
)

__all__ = [
    "FrequencyDomainSymbol",
    "TimeDomainSymbol",
    "idft_modulate",
    "dft_demodulate",
    "add_cyclic_prefix",
    "remove_cyclic_prefix",
    "apply_window",
    "concatenate_symbols",
    "papr_db",
    "OfdmProfile",
    "profile_80211a",
    "profile_dab",
    "profile_dvbh",
    "get_profile",
    "transceive",
    "timeslice_power_saving",
]

__version__ = "0.1.0"
