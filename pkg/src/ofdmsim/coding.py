"""Convolutional coding, Viterbi decoding and block interleaving.

Generator polynomials are K-bit masks with the most significant bit acting
on the current input bit and lower bits on progressively older bits, so the
octal constants read the same way they are usually printed (133 -> 1011011).
The encoder starts in the all-zero state and is terminated with K-1 flush
zeros; the decoder assumes the same zero start/end states.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConvCode:
    """A feedforward convolutional code of rate 1/n_out."""

    constraint_len: int
    generators: tuple

    def __post_init__(self):
        k = self.constraint_len
        if k < 2:
            raise ValueError(f"constraint length must be >= 2, got {k}")
        if len(self.generators) < 2:
            raise ValueError("need at least two generator polynomials")
        if len(set(self.generators)) < 2:
            raise ValueError("generators must not all be identical")
        top, bottom = 1 << (k - 1), 1
        for g in self.generators:
            if g <= 0 or g >= (1 << k):
                raise ValueError(f"generator {g:o} does not fit in {k} bits")
            if not (g & top) or not (g & bottom):
                raise ValueError(
                    f"generator {g:o} must tap both the current and the oldest bit"
                )

    @property
    def n_out(self) -> int:
        return len(self.generators)

    @property
    def n_states(self) -> int:
        return 1 << (self.constraint_len - 1)

    def tap_array(self, j: int) -> np.ndarray:
        """Generator j as a 0/1 tap vector, current-input tap first."""
        k = self.constraint_len
        return np.array(
            [(self.generators[j] >> (k - 1 - t)) & 1 for t in range(k)], dtype=np.int64
        )


# The de facto standard codes: (133,171) for the 802.11a-style profile and
# the DAB mother code (133,171,145,133), which deliberately repeats 133.
RATE_HALF_K7 = ConvCode(7, (0o133, 0o171))
RATE_QUARTER_K7 = ConvCode(7, (0o133, 0o171, 0o145, 0o133))


def conv_encode(bits, code: ConvCode) -> np.ndarray:
    """Encode with zero-state termination; output length (len(bits)+K-1)*n_out.

    Output bit i*n_out+j is the parity of the message convolved with
    generator j at step i, so a single 1 reproduces the generators' tap
    patterns interleaved.
    """
    bits = np.asarray(bits, dtype=np.int64)
    streams = [np.convolve(bits, code.tap_array(j)) % 2 for j in range(code.n_out)]
    out = np.empty(len(streams[0]) * code.n_out, dtype=np.uint8)
    for j, s in enumerate(streams):
        out[j::code.n_out] = s
    return out


def _trellis_tables(code: ConvCode):
    """Per next-state transition tables.

    For next state ns and carried-out bit z, the predecessor state is
    (2*ns+z) mod n_states, the full register is 2*ns+z, and the input bit is
    the top bit of ns.  Returns (pred0, pred1, bipolar_outputs[S*2, n_out])
    where the output rows are ordered (ns, z).
    """
    s = code.n_states
    ns = np.arange(s)
    regs = np.empty(2 * s, dtype=np.int64)
    regs[0::2] = 2 * ns       # z = 0
    regs[1::2] = 2 * ns + 1   # z = 1
    pred0 = (2 * ns) & (s - 1)
    pred1 = pred0 | 1
    outs = np.empty((2 * s, code.n_out))
    for j, g in enumerate(code.generators):
        masked = regs & g
        parity = np.zeros(2 * s, dtype=np.int64)
        m = masked.copy()
        while m.any():
            parity ^= m & 1
            m >>= 1
        outs[:, j] = 2.0 * parity - 1.0  # coded bit 1 -> +1, matching LLR sign
    return pred0, pred1, outs


_BM_CHUNK = 8192  # steps of branch metrics computed per matmul


def viterbi_decode(llrs, code: ConvCode) -> np.ndarray:
    """Maximum-likelihood decode of soft metrics (positive LLR = bit 1).

    Maximizes the correlation between the LLRs and the bipolar codeword over
    the zero-start/zero-end trellis.  Metric ties are broken toward the
    lower-numbered predecessor state.  Returns the message without the K-1
    flush bits.
    """
    llrs = np.asarray(llrs, dtype=np.float64).ravel()
    if llrs.size % code.n_out != 0:
        raise ValueError(
            f"metric count {llrs.size} not divisible by n_out={code.n_out}"
        )
    n_steps = llrs.size // code.n_out
    flush = code.constraint_len - 1
    if n_steps < flush:
        raise ValueError(f"need at least {flush} trellis steps, got {n_steps}")
    s = code.n_states
    pred0, pred1, outs = _trellis_tables(code)

    pm = np.full(s, -np.inf)
    pm[0] = 0.0
    backptr = np.empty((n_steps, s), dtype=np.uint8)
    steps = llrs.reshape(n_steps, code.n_out)
    for base in range(0, n_steps, _BM_CHUNK):
        bm = steps[base:base + _BM_CHUNK] @ outs.T  # (chunk, 2*s), row order (ns, z)
        for t in range(bm.shape[0]):
            cand0 = pm[pred0] + bm[t, 0::2]
            cand1 = pm[pred1] + bm[t, 1::2]
            take1 = cand1 > cand0  # strict: ties keep the lower predecessor
            backptr[base + t] = take1
            pm = np.where(take1, cand1, cand0)

    # zero-terminated: trace back from state 0
    top_shift = code.constraint_len - 2
    decoded = np.empty(n_steps, dtype=np.uint8)
    state = 0
    for t in range(n_steps - 1, -1, -1):
        decoded[t] = state >> top_shift
        state = (2 * state + backptr[t, state]) & (s - 1)
    return decoded[:n_steps - flush]


def viterbi_decode_hard(bits, code: ConvCode) -> np.ndarray:
    """Minimum-Hamming-distance decode of hard bits via the soft kernel.

    Mapping bits to bipolar pseudo-LLRs preserves the Hamming-metric order
    and its ties exactly.
    """
    bits = np.asarray(bits, dtype=np.float64).ravel()
    return viterbi_decode(2.0 * bits - 1.0, code)


@dataclass(frozen=True)
class Interleaver:
    """A fixed bit permutation: out[perm[i]] = in[i]."""

    perm: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        object.__setattr__(self, "perm", perm)
        if sorted(perm.tolist()) != list(range(len(perm))):
            raise ValueError("perm is not a permutation of 0..size-1")

    @property
    def size(self) -> int:
        return len(self.perm)

    @classmethod
    def row_column(cls, rows: int, cols: int) -> "Interleaver":
        """Write row-wise into a rows x cols block, read column-wise."""
        if rows < 1 or cols < 1:
            raise ValueError("rows and cols must be positive")
        i = np.arange(rows * cols)
        return cls((i % cols) * rows + i // cols)

    @classmethod
    def identity(cls, size: int) -> "Interleaver":
        return cls(np.arange(size))


def interleave(bits, il: Interleaver) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.size != il.size:
        raise ValueError(f"input length {bits.size} != interleaver size {il.size}")
    out = np.empty_like(bits)
    out[il.perm] = bits
    return out


def deinterleave(bits, il: Interleaver) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.size != il.size:
        raise ValueError(f"input length {bits.size} != interleaver size {il.size}")
    return bits[il.perm]
