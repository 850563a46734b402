"""End-to-end tests of the command-line interface."""

import json

import pytest

from ofdmsim.cli import main, parse_snr_list, parse_taps
from ofdmsim.harness import ConfigError


class TestParsers:
    def test_range_inclusive(self):
        assert parse_snr_list("0:2:20") == tuple(float(x) for x in range(0, 21, 2))

    def test_comma_list(self):
        assert parse_snr_list("1.5,3,10") == (1.5, 3.0, 10.0)

    def test_bad_range(self):
        with pytest.raises(ConfigError):
            parse_snr_list("0:2")
        with pytest.raises(ConfigError):
            parse_snr_list("0:-1:10")

    def test_taps(self):
        assert parse_taps("0=1,3=0.5+0.5j") == ((0, 1 + 0j), (3, 0.5 + 0.5j))
        with pytest.raises(ConfigError):
            parse_taps("0:1")


class TestBerCommand:
    def test_snr_range_emits_11_records(self, tmp_path, capsys):
        out = tmp_path / "ber.csv"
        code = main(["ber", "--profile", "80211a", "--snr", "0:2:20",
                     "--seed", "1", "--min-bits", "1000", "--max-errors", "20",
                     "--max-bits", "1000", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "snr_db,bits_simulated,bit_errors,ber,papr_p99_db,elapsed_s"
        assert len(lines) == 12

    def test_missing_profile_exits_1(self, capsys):
        code = main(["ber", "--profile", "wimax", "--snr", "10",
                     "--min-bits", "1000", "--max-bits", "1000"])
        assert code == 1
        assert "profile" in capsys.readouterr().err

    def test_unknown_flag_exits_1(self, capsys):
        assert main(["ber", "--nonsense"]) == 1

    def test_byte_identical_reruns(self, tmp_path):
        args = ["ber", "--profile", "80211a", "--snr", "5,15", "--seed", "9",
                "--min-bits", "2000", "--max-errors", "30",
                "--max-bits", "2000"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json_format(self, tmp_path):
        out = tmp_path / "ber.json"
        code = main(["ber", "--snr", "inf", "--min-bits", "1000",
                     "--max-bits", "1000", "--format", "json",
                     "--out", str(out)])
        assert code == 0
        rows = json.loads(out.read_text())
        assert rows[0]["ber"] == 0.0

    def test_stdout_when_no_out(self, capsys):
        code = main(["ber", "--snr", "inf", "--min-bits", "1000",
                     "--max-bits", "1000"])
        assert code == 0
        assert capsys.readouterr().out.startswith("snr_db,")

    def test_estimation_failure_exits_2(self, capsys):
        code = main(["ber", "--snr", "-40", "--min-bits", "1000",
                     "--max-bits", "1000", "--seed", "3"])
        assert code == 2
        assert "estimation failure" in capsys.readouterr().err

    def test_plot_writes_png(self, tmp_path):
        out = tmp_path / "ber.csv"
        code = main(["ber", "--snr", "inf", "--min-bits", "1000",
                     "--max-bits", "1000", "--out", str(out), "--plot"])
        assert code == 0
        assert (tmp_path / "ber.png").read_bytes()[:4] == b"\x89PNG"

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = {"profile": "80211a", "snr": [10.0], "min_bits": 1000,
               "max_bits": 1000, "max_errors": 10, "seed": 4}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "r.csv"
        code = main(["ber", "--config", str(path), "--snr", "inf",
                     "--out", str(out)])
        assert code == 0
        assert ",0,0.0," in out.read_text().splitlines()[1]

    def test_unknown_config_key_exits_1(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"snr_list": [1]}))
        assert main(["ber", "--config", str(path)]) == 1
        assert "snr_list" in capsys.readouterr().err

    def test_channel_flags(self, tmp_path):
        out = tmp_path / "mp.csv"
        code = main(["ber", "--snr", "inf", "--min-bits", "1000",
                     "--max-bits", "1000", "--taps", "0=1,4=0.3",
                     "--cfo", "0.1", "--timing-offset", "5",
                     "--out", str(out)])
        assert code == 0
        assert ",0,0.0," in out.read_text().splitlines()[1]


class TestPaprCommand:
    def test_runs_and_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["papr", "--profile", "80211a", "--symbols", "1500",
                "--seed", "2"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        header = a.read_text().splitlines()[0]
        assert header == "threshold_db,exceedance_prob"

    def test_too_few_symbols_exits_1(self, capsys):
        assert main(["papr", "--symbols", "10"]) == 1


class TestSpectrumCommand:
    def test_runs_with_window_flag(self, tmp_path):
        out = tmp_path / "spec.csv"
        code = main(["spectrum", "--profile", "80211a", "--symbols", "120",
                     "--windowed", "--seed", "5", "--out", str(out),
                     "--plot"])
        assert code == 0
        assert out.read_text().startswith("freq_subcarriers,psd_db")
        assert (tmp_path / "spec.png").exists()


class TestDabFrameCommand:
    def test_clean_frame_roundtrip(self, tmp_path):
        out = tmp_path / "dab.json"
        code = main(["dab-frame", "--mode", "3", "--symbols", "3",
                     "--seed", "6", "--format", "json", "--out", str(out)])
        assert code == 0
        row = json.loads(out.read_text())[0]
        assert row["mode"] == 3
        assert row["null_index"] == 0
        assert row["bit_errors"] == 0

    def test_with_offset_and_noise(self, capsys):
        code = main(["dab-frame", "--mode", "3", "--symbols", "2",
                     "--offset", "400", "--snr", "20", "--seed", "7"])
        assert code == 0
        body = capsys.readouterr().out.splitlines()
        row = dict(zip(body[0].split(","), body[1].split(",")))
        assert row["null_index"] == "400"

    def test_plot_power_trace(self, tmp_path):
        out = tmp_path / "frame.csv"
        code = main(["dab-frame", "--mode", "3", "--symbols", "2",
                     "--seed", "8", "--out", str(out), "--plot"])
        assert code == 0
        assert (tmp_path / "frame.png").read_bytes()[:4] == b"\x89PNG"


class TestTimesliceCommand:
    def test_prints_saving(self, capsys):
        assert main(["timeslice", "--burst", "0.1", "--cycle", "1.0"]) == 0
        assert capsys.readouterr().out.strip() == "saving 0.9"

    def test_overhead(self, capsys):
        assert main(["timeslice", "--burst", "0.1", "--cycle", "1.0",
                     "--overhead", "0.05"]) == 0
        assert capsys.readouterr().out.strip() == "saving 0.85"

    def test_invalid_exits_1(self, capsys):
        assert main(["timeslice", "--burst", "2.0", "--cycle", "1.0"]) == 1

    def test_writes_record_file(self, tmp_path):
        out = tmp_path / "ts.csv"
        assert main(["timeslice", "--burst", "0.25", "--cycle", "1.0",
                     "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == \
            "burst_s,cycle_s,overhead_s,saving"
