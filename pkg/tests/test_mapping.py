"""Unit tests for constellation mapping and differential QPSK."""

import numpy as np
import pytest

from ofdmsim.mapping import (
    BPSK,
    QPSK,
    QAM16,
    QAM64,
    DqpskReference,
    constellation,
    demap_hard,
    demap_soft,
    dqpsk_decode,
    dqpsk_encode,
    labels_to_bits,
    map_bits,
)

ALL = (BPSK, QPSK, QAM16, QAM64)


class TestConstellations:
    @pytest.mark.parametrize("c", ALL, ids=lambda c: c.scheme)
    def test_unit_average_power(self, c):
        assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) < 1e-12

    @pytest.mark.parametrize("c", ALL, ids=lambda c: c.scheme)
    def test_gray_neighbors_differ_in_one_bit(self, c):
        pts = c.points
        d = np.abs(pts[:, None] - pts[None, :])
        d[np.eye(len(pts), dtype=bool)] = np.inf
        dmin = d.min()
        for a in range(len(pts)):
            for b in range(len(pts)):
                if a < b and d[a, b] < dmin * 1.001:
                    assert bin(a ^ b).count("1") == 1, (a, b)

    def test_qpsk_zero_label(self):
        np.testing.assert_allclose(
            map_bits([0, 0], QPSK), [(1 + 1j) / np.sqrt(2)], atol=1e-15
        )

    def test_bpsk_table(self):
        np.testing.assert_allclose(map_bits([0, 1], BPSK), [-1.0, 1.0], atol=0)

    def test_lookup_by_name(self):
        assert constellation("QAM64") is QAM64
        assert constellation("16qam") is QAM16
        with pytest.raises(ValueError):
            constellation("qam256")


class TestMapDemap:
    @pytest.mark.parametrize("c", ALL, ids=lambda c: c.scheme)
    def test_exhaustive_roundtrip(self, c):
        labels = np.arange(c.n_points)
        bits = labels_to_bits(labels, c.bits_per_symbol)
        np.testing.assert_array_equal(demap_hard(c.points, c), bits)

    def test_qpsk_96_bits(self):
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, 96)
        symbols = map_bits(bits, QPSK)
        assert len(symbols) == 48
        np.testing.assert_array_equal(demap_hard(symbols, QPSK), bits)

    @pytest.mark.parametrize("c", ALL, ids=lambda c: c.scheme)
    def test_noise_within_half_min_distance(self, c):
        pts = c.points
        d = np.abs(pts[:, None] - pts[None, :])
        d[np.eye(len(pts), dtype=bool)] = np.inf
        dmin = d.min()
        rng = np.random.default_rng(1)
        for label in range(c.n_points):
            for _ in range(8):
                noise = rng.standard_normal() + 1j * rng.standard_normal()
                noise = 0.49 * dmin * noise / abs(noise)
                got = demap_hard(np.array([pts[label] + noise]), c)
                np.testing.assert_array_equal(
                    got, labels_to_bits(np.array([label]), c.bits_per_symbol)
                )

    def test_origin_ties_to_smallest_label(self):
        np.testing.assert_array_equal(demap_hard(np.array([0j]), QPSK), [0, 0])
        np.testing.assert_array_equal(demap_hard(np.array([0j]), QAM16),
                                      [0, 1, 0, 1])

    def test_indivisible_bit_count_rejected(self):
        with pytest.raises(ValueError):
            map_bits([0, 1, 0], QPSK)


class TestDemapSoft:
    def test_bpsk_hand_value(self):
        # max-log for received +1: ((-1-1)^2 - 0)/1 = +4
        llr = demap_soft(np.array([1.0 + 0j]), BPSK, 1.0)
        np.testing.assert_allclose(llr, [4.0], atol=1e-14)

    def test_equidistant_symbol_gives_zero(self):
        llr = demap_soft(np.array([0j]), QPSK, 1.0)
        np.testing.assert_allclose(llr, [0.0, 0.0], atol=1e-14)

    def test_scales_with_noise_var(self):
        a = demap_soft(np.array([0.3 - 0.8j]), QAM16, 1.0)
        b = demap_soft(np.array([0.3 - 0.8j]), QAM16, 0.5)
        np.testing.assert_allclose(b, 2 * a, atol=1e-12)

    @pytest.mark.parametrize("c", ALL, ids=lambda c: c.scheme)
    def test_sign_agrees_with_hard_decision(self, c):
        rng = np.random.default_rng(2)
        bits = rng.integers(0, 2, 600 * c.bits_per_symbol)
        noisy = map_bits(bits, c) + 0.2 * (
            rng.standard_normal(600) + 1j * rng.standard_normal(600)
        )
        hard = demap_hard(noisy, c)
        llrs = demap_soft(noisy, c, 0.08)
        np.testing.assert_array_equal((llrs > 0).astype(np.uint8), hard)

    def test_nonpositive_noise_var_rejected(self):
        with pytest.raises(ValueError):
            demap_soft(np.array([1 + 0j]), BPSK, 0.0)


class TestDqpsk:
    def test_repeated_00_walks_pi_over_4(self):
        ref = DqpskReference(np.ones(1, complex))
        out = dqpsk_encode(np.zeros(8, dtype=int), ref)
        expected = np.exp(1j * np.pi / 4 * np.arange(1, 5))
        np.testing.assert_allclose(out[:, 0], expected, atol=1e-12)

    def test_four_dibits_give_distinct_unit_outputs(self):
        ref = DqpskReference(np.ones(4, complex))
        out = dqpsk_encode(np.array([0, 0, 0, 1, 1, 1, 1, 0]), ref)
        assert out.shape == (1, 4)
        np.testing.assert_allclose(np.abs(out), 1.0, atol=1e-12)
        assert len({np.round(v, 9) for v in out.ravel()}) == 4

    @pytest.mark.parametrize("theta", [0.0, 0.3, np.pi / 2, 2.9])
    def test_roundtrip_under_constant_rotation(self, theta):
        rng = np.random.default_rng(3)
        n_carriers, n_symbols = 24, 10
        bits = rng.integers(0, 2, 2 * n_carriers * n_symbols)
        tx_ref = np.exp(1j * rng.uniform(0, 2 * np.pi, n_carriers))
        enc = dqpsk_encode(bits, DqpskReference(tx_ref.copy()))
        rot = np.exp(1j * theta)
        rx_ref = DqpskReference(tx_ref * rot)
        got = dqpsk_decode(enc * rot, rx_ref)
        np.testing.assert_array_equal(got, bits)

    def test_encode_outputs_unit_modulus(self):
        rng = np.random.default_rng(4)
        ref = DqpskReference(np.exp(1j * rng.uniform(0, 2 * np.pi, 16)))
        out = dqpsk_encode(rng.integers(0, 2, 2 * 16 * 50), ref)
        assert np.max(np.abs(np.abs(out) - 1.0)) < 1e-9

    def test_reference_chains_across_calls(self):
        rng = np.random.default_rng(5)
        bits = rng.integers(0, 2, 2 * 8 * 6)
        one = dqpsk_encode(bits, DqpskReference(np.ones(8, complex)))
        ref = DqpskReference(np.ones(8, complex))
        parts = [dqpsk_encode(bits[i * 48:(i + 1) * 48], ref) for i in range(2)]
        np.testing.assert_allclose(np.vstack(parts), one, atol=1e-12)

    def test_missing_reference_rejected(self):
        with pytest.raises(ValueError):
            dqpsk_encode(np.zeros(8, dtype=int), None)
        with pytest.raises(ValueError):
            DqpskReference(np.array([2.0 + 0j]))

    def test_bit_count_must_fill_symbols(self):
        with pytest.raises(ValueError):
            dqpsk_encode(np.zeros(6, dtype=int), DqpskReference(np.ones(4, complex)))
