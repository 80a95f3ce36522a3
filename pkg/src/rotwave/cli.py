"""Command-line front end.

    rotwave {populations,trace,carpet,signal,spectrum,revivals} CONFIG
            [--set section.key=value ...] [-o OUTPUT]

Exit codes: 0 success, 2 configuration, 3 numerical convergence, 4 I/O.
Every data file gets a ``<OUTPUT>.manifest`` holding the resolved
configuration and a ``diagnostics`` section.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .analysis import beat_spectrum, revival_times, smooth
from .config import ConfigError, Configuration, dump_config, load_config, parse_document
from .dynamics import ConvergenceError, PulseKernel, kick_strength
from .ensemble import TailMassError, boltzmann_populations, build_ensemble, two_level_ensemble
from .observables import alignment_trace, detector_signal, quantum_carpet, theta_grid

EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 2, 3, 4


def fmt(x) -> str:
    return f"{float(x):.12g}"


def _tool_version() -> str:
    try:
        return version("rotwave")
    except PackageNotFoundError:
        return "unknown"


def resolve_config(text: str, overrides=()) -> Configuration:
    """Parse ``text`` with ``key=value`` overrides applied on top."""
    entries = parse_document(text)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        entries[key.strip()] = value.strip()
    return load_config("".join(f"{k} = {v}\n" for k, v in entries.items()))


def _ensemble(config: Configuration, record_times=()):
    table = boltzmann_populations(
        config.run.temperature, config.molecule, config.run.j_init_cut, config.run.tail_tolerance
    )
    pulse = PulseKernel.from_spec(config.pulse)
    ens = build_ensemble(table, pulse, config.molecule, config.run, record_times)
    diag = dict(ens.diagnostics)
    diag["kick_strength"] = kick_strength(pulse, config.molecule)
    return ens, diag


# Each command returns (csv text, diagnostics).


def cmd_populations(config: Configuration):
    run = config.run
    table = boltzmann_populations(
        run.temperature, config.molecule, run.j_init_cut, run.tail_tolerance
    )
    out = io.StringIO(newline="")
    out.write("J,population,spin_weight,per_M_weight\n")
    for j, p, g, w in zip(table.js, table.populations, table.spin_weights, table.per_m_weights):
        out.write(f"{j},{fmt(p)},{g},{fmt(w)}\n")
    return out.getvalue(), {"tail_mass": table.tail_mass}


def cmd_trace(config: Configuration):
    times = config.run.time_grid
    ens, diag = _ensemble(config, times)
    raw = alignment_trace(ens, times)
    smoothed = smooth(raw, min(config.run.smoothing_window, _largest_odd(times.size)))
    out = io.StringIO(newline="")
    out.write("t_fs,cos2_raw,cos2_smoothed\n")
    for t, a, b in zip(times, raw.values, smoothed.values):
        out.write(f"{fmt(t)},{fmt(a)},{fmt(b)}\n")
    return out.getvalue(), diag


def _largest_odd(n: int) -> int:
    return n if n % 2 else n - 1


def _carpet(config: Configuration):
    times = config.run.carpet_times
    ens, diag = _ensemble(config, times)
    return quantum_carpet(ens, times, theta_grid(config.run.theta_points)), diag


def cmd_carpet(config: Configuration):
    carpet, diag = _carpet(config)
    diag["max_column_norm_error"] = float(np.abs(carpet.integrate() - 1.0).max())
    out = io.StringIO(newline="")
    out.write("t_fs,theta_rad,density\n")
    for t, row in zip(carpet.times, carpet.density):
        ts = fmt(t)
        for theta, d in zip(carpet.thetas, row):
            out.write(f"{ts},{fmt(theta)},{fmt(d)}\n")
    return out.getvalue(), diag


def cmd_signal(config: Configuration):
    carpet, diag = _carpet(config)
    signal = detector_signal(carpet, config.pulse.polarization_angle, config.run.detector_half_angle)
    diag["mean_density"] = signal.metadata["mean_density"]
    out = io.StringIO(newline="")
    out.write("t_fs,signal\n")
    for t, v in zip(signal.times, signal.values):
        out.write(f"{fmt(t)},{fmt(v)}\n")
    return out.getvalue(), diag


def cmd_spectrum(config: Configuration):
    run = config.run
    t0, t1 = run.spectrum_start, run.spectrum_stop
    two_level = run.spectrum_source == "two_level"
    field_free = 0.0 if two_level else PulseKernel.from_spec(config.pulse).t_end
    if not t1 > t0 or t0 < field_free:
        raise ConfigError(
            f"[{t0}, {t1}] fs is not a non-empty field-free window (field-free from "
            f"{field_free} fs)",
            "analysis.spectrum_start",
        )
    ens, diag = (two_level_ensemble(config.molecule), {}) if two_level else _ensemble(config)
    times = t0 + run.t_step * np.arange(int(math.floor((t1 - t0) / run.t_step + 1e-9)) + 1)
    trace = alignment_trace(ens, times)
    spectrum = beat_spectrum(trace, t0, t1, config.molecule)
    out = io.StringIO(newline="")
    out.write("freq_THz,amplitude\n")
    for f, a in zip(spectrum.frequencies, spectrum.amplitudes):
        out.write(f"{fmt(f)},{fmt(a)}\n")
    out.write("#peaks\n#freq_THz,amplitude,beat\n")
    for peak in spectrum.peaks:
        out.write(f"#{fmt(peak.frequency)},{fmt(peak.amplitude)},{peak.label}\n")
    diag["peak_count"] = len(spectrum.peaks)
    return out.getvalue(), diag


def cmd_revivals(config: Configuration):
    out = io.StringIO(newline="")
    out.write("fraction,time_fs\n")
    for frac, t in revival_times(config.molecule, config.run.revival_count):
        out.write(f"{frac},{fmt(t)}\n")
    return out.getvalue(), {}


COMMANDS = {
    "populations": cmd_populations,
    "trace": cmd_trace,
    "carpet": cmd_carpet,
    "signal": cmd_signal,
    "spectrum": cmd_spectrum,
    "revivals": cmd_revivals,
}


def manifest_text(config: Configuration, command: str, data_file: str, diag: dict, runtime: float) -> str:
    lines = [dump_config(config)]
    items = {
        "tool_version": _tool_version(),
        "command": command,
        "data_file": data_file,
        "runtime_s": f"{runtime:.3f}",
        "temperature_used": fmt(config.run.temperature),
        **{k: fmt(v) if isinstance(v, float) else str(v) for k, v in diag.items()},
    }
    lines += [f"diagnostics.{k} = {v}\n" for k, v in items.items()]
    return "".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotwave", description="Impulsive rotational wavepackets in thermal rotor ensembles."
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="configuration file (section.key = value lines)")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a configuration key after the file is parsed",
    )
    parser.add_argument("-o", "--output", help="output file (default: <command>.csv; "
                        "revivals prints to stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        config = resolve_config(text, args.overrides)
        data, diag = COMMANDS[args.command](config)
    except (ConfigError, TailMassError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE

    if args.command == "revivals" and not args.output:
        sys.stdout.write(data)
        return 0
    output = Path(args.output or f"{args.command}.csv")
    try:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        manifest = output.with_name(output.name + ".manifest")
        with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                manifest_text(config, args.command, output.name, diag, time.perf_counter() - started)
            )
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
