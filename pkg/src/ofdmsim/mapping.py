"""Bit <-> constellation mapping.

Gray-labelled BPSK/QPSK/16-QAM/64-QAM at unit average energy, hard and
max-log soft demapping, and the differential QPSK used by the DAB profiles.

Label convention: a symbol's bits are read MSB-first into an integer label.
For QPSK and the square QAMs the first half of the bits selects the I level
and the second half the Q level, each through a per-axis Gray table whose
all-zeros entry is the most positive level (so QPSK 00 -> (+1+j)/sqrt(2)).
"""

from dataclasses import dataclass

import numpy as np

def _gray_axis(n_bits: int) -> np.ndarray:
    """Unscaled amplitude per axis label, binary-reflected Gray ordered.

    Descending levels +(M-1), +(M-3), ..., -(M-1) are assigned to labels in
    Gray-code order, so adjacent levels differ in exactly one bit and the
    all-zeros label takes the most positive level.
    """
    m = 1 << n_bits
    ranks = np.arange(m)
    table = np.empty(m)
    table[ranks ^ (ranks >> 1)] = (m - 1) - 2 * ranks
    return table


@dataclass(frozen=True)
class Constellation:
    """A bit-labelled constellation with unit average energy."""

    scheme: str
    bits_per_symbol: int
    points: np.ndarray  # complex, indexed by the integer bit label

    @property
    def n_points(self) -> int:
        return len(self.points)


def _square_qam(scheme: str, bits_per_symbol: int) -> Constellation:
    half = bits_per_symbol // 2
    axis = _gray_axis(half)
    labels = np.arange(1 << bits_per_symbol)
    i_bits = labels >> half
    q_bits = labels & ((1 << half) - 1)
    pts = axis[i_bits] + 1j * axis[q_bits]
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return Constellation(scheme, bits_per_symbol, pts)


BPSK = Constellation("bpsk", 1, np.array([-1.0 + 0j, 1.0 + 0j]))  # 0 -> -1
QPSK = _square_qam("qpsk", 2)
QAM16 = _square_qam("qam16", 4)
QAM64 = _square_qam("qam64", 6)

_BY_NAME = {
    "bpsk": BPSK,
    "qpsk": QPSK,
    "qam16": QAM16,
    "16qam": QAM16,
    "qam64": QAM64,
    "64qam": QAM64,
}


def constellation(scheme: str) -> Constellation:
    """Look up a constellation by name (case-insensitive)."""
    try:
        return _BY_NAME[scheme.lower()]
    except KeyError:
        raise ValueError(f"unknown modulation scheme: {scheme!r}") from None


def bits_to_labels(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % bits_per_symbol != 0:
        raise ValueError(
            f"bit count {bits.size} not divisible by {bits_per_symbol}; pad first"
        )
    groups = bits.reshape(-1, bits_per_symbol)
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return groups @ weights


def labels_to_bits(labels: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).ravel().astype(np.uint8)


def map_bits(bits, c: Constellation) -> np.ndarray:
    """Map a bit sequence to constellation points, MSB-first per symbol."""
    return c.points[bits_to_labels(bits, c.bits_per_symbol)]


def demap_hard(symbols, c: Constellation) -> np.ndarray:
    """Minimum-distance hard decisions; ties go to the smaller bit label."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    d2 = np.abs(symbols[:, None] - c.points[None, :]) ** 2
    labels = np.argmin(d2, axis=1)  # argmin keeps the first (smallest) label on ties
    return labels_to_bits(labels, c.bits_per_symbol)


def demap_soft(symbols, c: Constellation, noise_var: float) -> np.ndarray:
    """Max-log LLR per bit: (min dist^2 over bit=0 points - min over bit=1)/noise_var.

    Positive LLR means bit 1, matching the sign of demap_hard's decision.
    """
    if not noise_var > 0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    symbols = np.asarray(symbols, dtype=np.complex128)
    d2 = np.abs(symbols[:, None] - c.points[None, :]) ** 2
    nbits = c.bits_per_symbol
    labels = np.arange(c.n_points)
    llrs = np.empty((len(symbols), nbits))
    for i in range(nbits):
        bit_is_one = (labels >> (nbits - 1 - i)) & 1 == 1
        min0 = d2[:, ~bit_is_one].min(axis=1)
        min1 = d2[:, bit_is_one].min(axis=1)
        llrs[:, i] = (min0 - min1) / noise_var
    return llrs.ravel()


# --- Differential QPSK (DAB) -------------------------------------------------

# Phase increments Gray-indexed by the dibit: 00,01,11,10 walk the quadrants.
_DQPSK_PHASES = np.array([np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4])
_DQPSK_DIBITS = {0b00: 0, 0b01: 1, 0b11: 2, 0b10: 3}
_DQPSK_DIBIT_OF_INDEX = np.array([0b00, 0b01, 0b11, 0b10])


class DqpskReference:
    """Per-subcarrier phase reference carried between consecutive OFDM symbols."""

    def __init__(self, prev):
        prev = np.asarray(prev, dtype=np.complex128)
        if prev.ndim != 1 or len(prev) == 0:
            raise ValueError("reference must be a non-empty 1-D complex sequence")
        if np.max(np.abs(np.abs(prev) - 1.0)) > 1e-12:
            raise ValueError("reference entries must have unit modulus")
        self.prev = prev

    def __len__(self) -> int:
        return len(self.prev)


def dqpsk_encode(bits, ref: DqpskReference) -> np.ndarray:
    """Differentially encode dibits across OFDM symbols.

    ``bits`` must hold 2 * len(ref) bits per OFDM symbol.  Returns an
    (n_symbols, n_carriers) array of unit-modulus values; ``ref`` is advanced
    to the last emitted symbol so calls can be chained.
    """
    if ref is None:
        raise ValueError("a populated DqpskReference is required")
    n_carriers = len(ref)
    bits = np.asarray(bits, dtype=np.int64)
    per_symbol = 2 * n_carriers
    if bits.size == 0 or bits.size % per_symbol != 0:
        raise ValueError(
            f"bit count {bits.size} must be a positive multiple of {per_symbol}"
        )
    dibits = (bits.reshape(-1, 2) @ np.array([2, 1])).reshape(-1, n_carriers)
    idx = np.array([_DQPSK_DIBITS[d] for d in dibits.ravel()]).reshape(dibits.shape)
    rot = np.exp(1j * _DQPSK_PHASES[idx])
    out = np.empty_like(rot)
    prev = ref.prev
    for t in range(rot.shape[0]):
        prev = prev * rot[t]
        out[t] = prev
    # renormalize so rounding never drifts the reference off the unit circle
    ref.prev = out[-1] / np.abs(out[-1])
    return out


def dqpsk_decode(symbols, ref: DqpskReference) -> np.ndarray:
    """Invert dqpsk_encode by nearest phase quadrant of z(t)*conj(z(t-1)).

    ``symbols`` is (n_symbols, n_carriers); ``ref`` holds the received
    reference and is advanced to the last received symbol.
    """
    if ref is None:
        raise ValueError("a populated DqpskReference is required")
    symbols = np.atleast_2d(np.asarray(symbols, dtype=np.complex128))
    if symbols.shape[1] != len(ref):
        raise ValueError(
            f"symbol width {symbols.shape[1]} != reference width {len(ref)}"
        )
    prev = np.vstack([ref.prev, symbols[:-1]])
    prod = symbols * np.conj(prev)
    # phases sit at pi/4 + k*pi/2, so quadrant index = floor(angle / (pi/2)) mod 4
    idx = np.floor_divide(np.angle(prod), np.pi / 2).astype(np.int64) % 4
    last = symbols[-1]
    mags = np.abs(last)
    ref.prev = np.where(mags > 0, last / np.where(mags > 0, mags, 1.0), 1.0)
    dibits = _DQPSK_DIBIT_OF_INDEX[idx]
    bits = np.empty((dibits.size, 2), dtype=np.uint8)
    bits[:, 0] = (dibits.ravel() >> 1) & 1
    bits[:, 1] = dibits.ravel() & 1
    return bits.ravel()
