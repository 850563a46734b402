"""Figure rendering for the CLI report paths.

Each helper saves one matplotlib figure next to the delimited output file.
The Agg backend keeps this usable in headless runs; figures are only
produced when the CLI is invoked with --plot.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_ber_plot(records, path) -> None:
    """Semilog BER-vs-SNR curve; zero-error points are shown at the floor."""
    snr = [r.snr_db for r in records]
    ber = [r.ber for r in records]
    floor = min([b for b in ber if b > 0], default=1e-7) / 10
    shown = [b if b > 0 else floor for b in ber]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.semilogy(snr, shown, "o-")
    for x, b, s in zip(snr, ber, shown):
        if b == 0:
            ax.annotate("0", (x, s), textcoords="offset points",
                        xytext=(0, 6), ha="center", fontsize=8)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ccdf_plot(records, path) -> None:
    """PAPR CCDF on a log probability axis."""
    thr = [r.threshold_db for r in records]
    prob = [max(r.exceedance_prob, 0.0) for r in records]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.semilogy(thr, [p if p > 0 else np.nan for p in prob], "-")
    ax.set_xlabel("PAPR threshold (dB)")
    ax.set_ylabel("P(PAPR > threshold)")
    ax.grid(True, which="both", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_spectrum_plot(result, path) -> None:
    """Normalized Welch periodogram against subcarrier-relative frequency."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(result.freq_subcarriers, result.psd_db, lw=0.8)
    ax.set_xlabel("frequency (subcarrier spacings)")
    ax.set_ylabel("PSD (dB, in-band = 0)")
    ax.set_ylim(bottom=max(float(np.min(result.psd_db)), -120.0))
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_dab_frame_plot(samples, symbol_len, path) -> None:
    """Instantaneous power over a DAB frame, symbol boundaries marked."""
    power = np.abs(np.asarray(samples)) ** 2
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(power, lw=0.5)
    for k in range(0, len(power) + 1, symbol_len):
        ax.axvline(k, color="gray", lw=0.4, alpha=0.5)
    ax.set_xlabel("sample")
    ax.set_ylabel("|x|^2")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
