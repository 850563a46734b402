"""Command-line front end.

Subcommands: ber, papr, spectrum, dab-frame, timeslice.  Each accepts
--config <json file> and/or flags (flags win), writes CSV or JSON records to
--out (stdout otherwise) and, with --plot, renders a PNG figure next to the
data file.  Exit codes: 0 success, 1 configuration error, 2 runtime
estimation failure; diagnostics go to stderr.
"""

import argparse
import json
import sys

import numpy as np

from ofdmsim import harness, profiles
from ofdmsim.channel import ChannelSpec, make_rng, apply_awgn
from ofdmsim.harness import ConfigError, SweepConfig
from ofdmsim.synceq import SyncError


class _Parser(argparse.ArgumentParser):
    """argparse that exits with code 1 on bad flags (2 is reserved)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def parse_snr_list(text: str) -> tuple:
    """Either comma-separated values or an inclusive start:step:stop range."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"snr: expected start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("snr: step must be positive")
        values = np.arange(start, stop + step / 2, step)
        return tuple(float(v) for v in values)
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"snr: cannot parse {text!r}") from None


def parse_taps(text: str) -> tuple:
    """Tap list 'delay=gain,delay=gain' with complex gains, e.g. 0=1,3=0.5j."""
    taps = []
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"taps: expected delay=gain, got {item!r}")
        delay, gain = item.split("=", 1)
        try:
            taps.append((int(delay), complex(gain)))
        except ValueError:
            raise ConfigError(f"taps: cannot parse {item!r}") from None
    return tuple(taps)


def _channel_from_dict(d: dict) -> ChannelSpec:
    taps = d.get("taps")
    if taps is None:
        taps_t = ((0, 1.0 + 0j),)
    else:
        taps_t = tuple(
            (int(t[0]), complex(t[1], t[2] if len(t) > 2 else 0.0)) for t in taps
        )
    return ChannelSpec(
        taps=taps_t,
        cfo_fraction=float(d.get("cfo_fraction", 0.0)),
        timing_offset=int(d.get("timing_offset", 0)),
    )


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be a JSON object")
    return cfg


def _merged(args, keys) -> dict:
    """Config-file values overridden by explicitly-passed CLI flags."""
    cfg = load_config(getattr(args, "config", None))
    unknown = set(cfg) - set(keys)
    if unknown:
        raise ConfigError(f"config: unknown key {sorted(unknown)[0]!r}")
    for key in keys:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            cfg[key] = value
    return cfg


def _emit(records, out, fmt, plot, plot_fn) -> None:
    text = harness.write_records(records, out, fmt)
    if out is None:
        sys.stdout.write(text)
    if plot:
        if out is None:
            raise ConfigError("plot: --plot requires --out to name the figure")
        png = str(out).rsplit(".", 1)[0] + ".png"
        plot_fn(records, png)
        print(f"figure written to {png}", file=sys.stderr)


_BER_KEYS = (
    "profile", "modulation", "snr", "min_bits", "max_errors", "max_bits",
    "coded", "sync", "snr_is_ebn0", "channel", "seed", "out", "format",
    "plot", "timing",
)


def cmd_ber(args) -> int:
    cfg = _merged(args, _BER_KEYS)
    snr = cfg.get("snr", "0:5:20")
    if isinstance(snr, str):
        snr = parse_snr_list(snr)
    channel = cfg.get("channel", {})
    if isinstance(channel, dict):
        channel = _channel_from_dict(channel)
    sweep = SweepConfig(
        profile=cfg.get("profile", "80211a"),
        modulation=cfg.get("modulation"),
        snr_db=tuple(float(s) for s in snr),
        min_bits=int(cfg.get("min_bits", 10000)),
        max_errors=int(cfg.get("max_errors", 100)),
        max_bits=cfg.get("max_bits"),
        coded=bool(cfg.get("coded", True)),
        sync=cfg.get("sync", "estimate"),
        snr_is_ebn0=bool(cfg.get("snr_is_ebn0", False)),
        channel=channel,
        seed=int(cfg.get("seed", 0)),
        timing=bool(cfg.get("timing", False)),
    )
    records = harness.run_ber_sweep(sweep)
    from ofdmsim import plotting
    _emit(records, cfg.get("out"), cfg.get("format", "csv"),
          cfg.get("plot", False), plotting.save_ber_plot)
    return 0


_PAPR_KEYS = ("profile", "modulation", "symbols", "seed", "out", "format", "plot")


def cmd_papr(args) -> int:
    cfg = _merged(args, _PAPR_KEYS)
    records = harness.run_papr_ccdf(
        cfg.get("profile", "80211a"),
        int(cfg.get("symbols", 10000)),
        seed=int(cfg.get("seed", 0)),
        modulation=cfg.get("modulation"),
    )
    from ofdmsim import plotting
    _emit(records, cfg.get("out"), cfg.get("format", "csv"),
          cfg.get("plot", False), plotting.save_ccdf_plot)
    return 0


_SPECTRUM_KEYS = ("profile", "modulation", "windowed", "symbols", "seed",
                  "out", "format", "plot")


def cmd_spectrum(args) -> int:
    cfg = _merged(args, _SPECTRUM_KEYS)
    result = harness.run_spectrum(
        cfg.get("profile", "80211a"),
        bool(cfg.get("windowed", False)),
        int(cfg.get("symbols", 200)),
        seed=int(cfg.get("seed", 0)),
        modulation=cfg.get("modulation"),
    )
    from ofdmsim import plotting
    _emit(result.records(), cfg.get("out"), cfg.get("format", "csv"),
          cfg.get("plot", False),
          lambda _records, png: plotting.save_spectrum_plot(result, png))
    return 0


_DAB_KEYS = ("mode", "symbols", "snr", "offset", "seed", "out", "format", "plot")


def cmd_dab_frame(args) -> int:
    cfg = _merged(args, _DAB_KEYS)
    mode = int(cfg.get("mode", 1))
    n_symbols = int(cfg.get("symbols", 4))
    snr_db = cfg.get("snr")
    offset = int(cfg.get("offset", 0))
    seed = int(cfg.get("seed", 0))
    if n_symbols < 1:
        raise ConfigError("symbols: need at least one data symbol")
    profile = profiles.profile_dab(mode)
    per_symbol = profile.coded_bits_per_symbol // profile.code.n_out
    n_bits = n_symbols * per_symbol - (profile.code.constraint_len - 1)
    rng = make_rng((seed, 0xDAB, 0))
    payload = rng.integers(0, 2, n_bits).astype(np.uint8)
    frame = profiles.build_dab_frame(payload, profile)
    stream = frame.samples
    if offset:
        # mid-stream capture of a repeating broadcast: the previous frame's
        # tail precedes the null symbol
        if not 0 < offset <= len(stream):
            raise ConfigError(f"offset: must be in 1..{len(stream)}")
        stream = np.concatenate([stream[-offset:], stream])
    if snr_db is not None:
        stream = apply_awgn(stream, float(snr_db), make_rng((seed, 0xDAB, 1)))
    null_index = profiles.detect_null_symbol(stream, profile)
    decoded = profiles.decode_dab_frame(stream, profile)
    errors = int(np.sum(decoded[:n_bits] != payload))
    record = {
        "mode": mode,
        "n_fft": profile.n_fft,
        "guard_len": profile.guard_len,
        "data_symbols": n_symbols,
        "frame_duration_s": frame.duration_s,
        "null_index": null_index,
        "bits": n_bits,
        "bit_errors": errors,
        "ber": errors / n_bits,
    }
    from ofdmsim import plotting
    _emit([record], cfg.get("out"), cfg.get("format", "csv"),
          cfg.get("plot", False),
          lambda _r, png: plotting.save_dab_frame_plot(
              stream, profile.symbol_len, png))
    return 0


_TS_KEYS = ("burst", "cycle", "overhead", "out", "format")


def cmd_timeslice(args) -> int:
    cfg = _merged(args, _TS_KEYS)
    if "burst" not in cfg or "cycle" not in cfg:
        raise ConfigError("timeslice: both burst and cycle are required")
    spec = profiles.TimeSliceSpec(
        burst_duration=float(cfg["burst"]),
        cycle_period=float(cfg["cycle"]),
        wakeup_overhead=float(cfg.get("overhead", 0.0)),
    )
    saving = profiles.timeslice_power_saving(spec)
    print(f"saving {saving!r}")
    if cfg.get("out") is not None:
        record = {
            "burst_s": spec.burst_duration,
            "cycle_s": spec.cycle_period,
            "overhead_s": spec.wakeup_overhead,
            "saving": saving,
        }
        harness.write_records([record], cfg["out"], cfg.get("format", "csv"))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="ofdmsim",
                     description="OFDM physical-layer measurement harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_plot=True):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file (stdout when omitted)")
        p.add_argument("--format", choices=("csv", "json"))
        if with_plot:
            p.add_argument("--plot", action="store_const", const=True,
                           help="also render a PNG next to --out")

    ber = sub.add_parser("ber", help="Monte Carlo BER sweep")
    add_common(ber)
    ber.add_argument("--profile")
    ber.add_argument("--modulation")
    ber.add_argument("--snr", help="comma list or start:step:stop (inclusive)")
    ber.add_argument("--min-bits", type=int, dest="min_bits")
    ber.add_argument("--max-errors", type=int, dest="max_errors")
    ber.add_argument("--max-bits", type=int, dest="max_bits")
    ber.add_argument("--uncoded", action="store_const", const=False,
                     dest="coded", help="bypass the convolutional code")
    ber.add_argument("--sync", choices=("estimate", "oracle"))
    ber.add_argument("--ebn0", action="store_const", const=True,
                     dest="snr_is_ebn0",
                     help="interpret --snr as information-bit Eb/N0")
    ber.add_argument("--taps", type=parse_taps, dest="channel_taps",
                     help="multipath taps, e.g. 0=1,3=0.3+0.2j")
    ber.add_argument("--cfo", type=float, dest="channel_cfo",
                     help="carrier offset in subcarrier spacings")
    ber.add_argument("--timing-offset", type=int, dest="channel_timing")
    ber.add_argument("--timing", action="store_const", const=True,
                     help="record wall-clock seconds in the records")
    ber.set_defaults(func=cmd_ber)

    papr = sub.add_parser("papr", help="per-symbol PAPR CCDF")
    add_common(papr)
    papr.add_argument("--profile")
    papr.add_argument("--modulation")
    papr.add_argument("--symbols", type=int)
    papr.set_defaults(func=cmd_papr)

    spec = sub.add_parser("spectrum", help="Welch periodogram of the stream")
    add_common(spec)
    spec.add_argument("--profile")
    spec.add_argument("--modulation")
    spec.add_argument("--windowed", action="store_const", const=True,
                      help="apply the raised-cosine edge taper")
    spec.add_argument("--symbols", type=int)
    spec.set_defaults(func=cmd_spectrum)

    dab = sub.add_parser("dab-frame", help="build, impair and decode a DAB frame")
    add_common(dab)
    dab.add_argument("--mode", type=int, choices=(1, 2, 3, 4))
    dab.add_argument("--symbols", type=int, help="data symbols per frame")
    dab.add_argument("--snr", type=float, help="AWGN SNR in dB (clean if omitted)")
    dab.add_argument("--offset", type=int, help="prepended sample offset")
    dab.set_defaults(func=cmd_dab_frame)

    ts = sub.add_parser("timeslice", help="receiver power saving from time slicing")
    add_common(ts, with_plot=False)
    ts.add_argument("--burst", type=float, help="burst duration in seconds")
    ts.add_argument("--cycle", type=float, help="cycle period in seconds")
    ts.add_argument("--overhead", type=float, help="wakeup overhead in seconds")
    ts.set_defaults(func=cmd_timeslice)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # fold per-flag channel pieces into a channel dict for merging
    if getattr(args, "channel_taps", None) is not None or \
            getattr(args, "channel_cfo", None) is not None or \
            getattr(args, "channel_timing", None) is not None:
        args.channel = ChannelSpec(
            taps=args.channel_taps or ((0, 1.0 + 0j),),
            cfo_fraction=args.channel_cfo or 0.0,
            timing_offset=args.channel_timing or 0,
        )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ofdmsim: config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"ofdmsim: config error: {exc}", file=sys.stderr)
        return 1
    except SyncError as exc:
        print(f"ofdmsim: estimation failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
