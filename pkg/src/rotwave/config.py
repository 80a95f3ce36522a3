"""Molecule, pulse and run configuration: parsing, validation, serialization.

The document grammar is one ``section.key = value`` assignment per line.
``#`` starts a comment; blank lines are ignored; keys may appear once.
The ``diagnostics`` section is output-only (written into run manifests) and
is skipped on load so that a manifest parses back to the same configuration.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .constants import ANGSTROM3, CONSTANTS, W_PER_CM2, joule_to_rad_per_fs


class ConfigError(ValueError):
    """Malformed document or a value violating its constraint."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class MoleculeSpec:
    name: str
    rotational_constant: float  # B, cm^-1
    delta_alpha: float  # polarizability anisotropy volume, Angstrom^3
    spin_weight_even: int
    spin_weight_odd: int

    def __post_init__(self):
        if not self.rotational_constant > 0:
            raise ConfigError("must be > 0", "molecule.rotational_constant")
        if not self.delta_alpha >= 0:
            raise ConfigError("must be >= 0", "molecule.delta_alpha")
        for key in ("spin_weight_even", "spin_weight_odd"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError("must be a positive integer", f"molecule.{key}")

    def spin_weight(self, j: int) -> int:
        return self.spin_weight_even if j % 2 == 0 else self.spin_weight_odd


@dataclass(frozen=True)
class PulseSpec:
    wavelength: float = 800.0  # nm; carrier is cycle-averaged, kept as metadata
    fwhm_duration: float = 12.0  # fs, intensity FWHM
    peak_intensity: float = 2e14  # W/cm^2
    polarization_angle: float = math.pi / 2  # rad, pump vs detector axis
    envelope_cutoff: float = 3.0  # half-width of the propagation window in FWHM

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ConfigError("must be > 0", "pulse.wavelength")
        if not self.fwhm_duration > 0:
            raise ConfigError("must be > 0", "pulse.fwhm_duration")
        if not self.peak_intensity >= 0:
            raise ConfigError("must be >= 0", "pulse.peak_intensity")
        if not -math.pi <= self.polarization_angle <= math.pi:
            raise ConfigError("must lie in [-pi, pi]", "pulse.polarization_angle")
        if not self.envelope_cutoff > 0:
            raise ConfigError("must be > 0", "pulse.envelope_cutoff")

    @property
    def peak_intensity_si(self) -> float:
        """Peak intensity in W/m^2."""
        return self.peak_intensity * W_PER_CM2

    @property
    def half_window(self) -> float:
        return self.envelope_cutoff * self.fwhm_duration


@dataclass(frozen=True)
class RunConfig:
    temperature: float = 295.0
    fit_temperature: bool = False
    j_max: int = 40
    j_init_cut: int = 8
    steps_per_fwhm: int = 1200
    norm_tolerance: float = 1e-8
    truncation_tolerance: float = 1e-10
    tail_tolerance: float = 1e-5
    t_start: float = 0.0
    t_stop: float = 800.0
    t_step: float = 1.0
    theta_points: int = 128
    carpet_start: float = 150.0
    carpet_stop: float = 400.0
    carpet_step: float = 1.0
    smoothing_window: int = 11
    detector_half_angle: float = math.radians(2.0)
    spectrum_start: float = 200.0
    spectrum_stop: float = 3000.0
    spectrum_source: str = "ensemble"
    revival_count: int = 2

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigError("must be > 0", "run.temperature")
        if self.j_init_cut < 0:
            raise ConfigError("must be >= 0", "run.j_init_cut")
        if self.j_max < self.j_init_cut + 8:
            raise ConfigError(
                f"must be >= j_init_cut + 8 = {self.j_init_cut + 8}", "run.j_max"
            )
        if self.steps_per_fwhm < 1:
            raise ConfigError("must be >= 1", "run.steps_per_fwhm")
        for key in ("norm_tolerance", "truncation_tolerance", "tail_tolerance"):
            if not getattr(self, key) > 0:
                raise ConfigError("must be > 0", f"run.{key}")
        for prefix, start, stop, step in (
            ("time", self.t_start, self.t_stop, self.t_step),
            ("carpet", self.carpet_start, self.carpet_stop, self.carpet_step),
        ):
            if not step > 0:
                raise ConfigError("must be > 0", f"{prefix}.step")
            if not stop >= start:
                raise ConfigError("must be >= start", f"{prefix}.stop")
        if self.theta_points < 64 or self.theta_points % 2:
            raise ConfigError("must be even and >= 64", "theta.points")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigError("must be odd and >= 1", "analysis.smoothing_window")
        if not 0 < self.detector_half_angle <= math.pi:
            raise ConfigError("must lie in (0, pi]", "detector.half_angle")
        if self.spectrum_source not in ("ensemble", "two_level"):
            raise ConfigError("must be 'ensemble' or 'two_level'", "analysis.spectrum_source")
        if self.revival_count < 1:
            raise ConfigError("must be >= 1", "analysis.revival_count")

    @property
    def time_grid(self):
        return _grid(self.t_start, self.t_stop, self.t_step)

    @property
    def carpet_times(self):
        return _grid(self.carpet_start, self.carpet_stop, self.carpet_step)


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


# Built-in molecules.  D2 defaults: B is the spectroscopic ground-state value,
# delta_alpha is a literature-informed anisotropy volume; both configurable.
MOLECULES: dict[str, dict[str, Any]] = {
    "D2": dict(
        rotational_constant=30.4436, delta_alpha=0.30, spin_weight_even=6, spin_weight_odd=3
    ),
    "H2": dict(
        rotational_constant=60.853, delta_alpha=0.30, spin_weight_even=1, spin_weight_odd=3
    ),
}

# Reference room-temperature D2 populations for J = 0..6.
REFERENCE_POPULATIONS_D2 = (0.185, 0.208, 0.386, 0.112, 0.0899, 0.0128, 0.00522)


def field_amplitude_squared(intensity: float) -> float:
    """Peak-field squared E0^2 = 2 I / (eps0 c) in V^2/m^2, I in W/m^2."""
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    return 2.0 * intensity / (CONSTANTS.vacuum_permittivity * CONSTANTS.speed_of_light)


def interaction_energy(delta_alpha: float, intensity: float) -> float:
    """Cycle-averaged induced-dipole well depth multiplying cos^2(theta), in J.

    U = -(1/4) (4 pi eps0 delta_alpha) E0^2 = -2 pi delta_alpha I / c, with
    ``delta_alpha`` in Angstrom^3 and ``intensity`` in W/m^2.
    """
    if delta_alpha < 0 or intensity < 0:
        raise ValueError("delta_alpha and intensity must be >= 0")
    polarizability = 4.0 * math.pi * CONSTANTS.vacuum_permittivity * delta_alpha * ANGSTROM3
    return -0.25 * polarizability * field_amplitude_squared(intensity)


def interaction_rate(delta_alpha: float, intensity: float) -> float:
    """``interaction_energy`` expressed as U/hbar in rad/fs."""
    return joule_to_rad_per_fs(interaction_energy(delta_alpha, intensity))


# ---------------------------------------------------------------------------
# document grammar

_Parser = Callable[[str], Any]


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


# document key -> (target, field name, parser)
_KEYS: dict[str, tuple[str, str, _Parser]] = {
    "molecule.name": ("molecule", "name", str),
    "molecule.rotational_constant": ("molecule", "rotational_constant", _parse_float),
    "molecule.delta_alpha": ("molecule", "delta_alpha", _parse_float),
    "molecule.spin_weight_even": ("molecule", "spin_weight_even", _parse_int),
    "molecule.spin_weight_odd": ("molecule", "spin_weight_odd", _parse_int),
    "pulse.wavelength": ("pulse", "wavelength", _parse_float),
    "pulse.fwhm_duration": ("pulse", "fwhm_duration", _parse_float),
    "pulse.peak_intensity": ("pulse", "peak_intensity", _parse_float),
    "pulse.polarization_angle": ("pulse", "polarization_angle", _parse_float),
    "pulse.envelope_cutoff": ("pulse", "envelope_cutoff", _parse_float),
    "run.temperature": ("run", "temperature", _parse_float),
    "run.j_max": ("run", "j_max", _parse_int),
    "run.j_init_cut": ("run", "j_init_cut", _parse_int),
    "run.steps_per_fwhm": ("run", "steps_per_fwhm", _parse_int),
    "run.norm_tolerance": ("run", "norm_tolerance", _parse_float),
    "run.truncation_tolerance": ("run", "truncation_tolerance", _parse_float),
    "run.tail_tolerance": ("run", "tail_tolerance", _parse_float),
    "time.start": ("run", "t_start", _parse_float),
    "time.stop": ("run", "t_stop", _parse_float),
    "time.step": ("run", "t_step", _parse_float),
    "theta.points": ("run", "theta_points", _parse_int),
    "carpet.start": ("run", "carpet_start", _parse_float),
    "carpet.stop": ("run", "carpet_stop", _parse_float),
    "carpet.step": ("run", "carpet_step", _parse_float),
    "detector.half_angle": ("run", "detector_half_angle", _parse_float),
    "analysis.smoothing_window": ("run", "smoothing_window", _parse_int),
    "analysis.spectrum_start": ("run", "spectrum_start", _parse_float),
    "analysis.spectrum_stop": ("run", "spectrum_stop", _parse_float),
    "analysis.spectrum_source": ("run", "spectrum_source", str),
    "analysis.revival_count": ("run", "revival_count", _parse_int),
}
_MANDATORY = ("molecule.name",)
_OUTPUT_ONLY_SECTIONS = ("diagnostics",)


@dataclass(frozen=True)
class Configuration:
    molecule: MoleculeSpec
    pulse: PulseSpec
    run: RunConfig = field(default_factory=RunConfig)


def parse_document(text: str) -> dict[str, str]:
    """Split a document into raw ``{dotted key: value}`` pairs."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        section, dot, name = key.partition(".")
        if not dot or not section or not name or " " in key:
            raise ConfigError(f"line {lineno}: key must be 'section.key'", key)
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key", key)
        entries[key] = value
    return entries


def load_config(text: str) -> Configuration:
    """Parse and validate a configuration document, filling defaults."""
    entries = parse_document(text)
    for key in _MANDATORY:
        if key not in entries:
            raise ConfigError("mandatory key missing", key)

    values: dict[str, dict[str, Any]] = {"molecule": {}, "pulse": {}, "run": {}}
    for key, raw in entries.items():
        if key.split(".", 1)[0] in _OUTPUT_ONLY_SECTIONS:
            continue
        if key not in _KEYS:
            raise ConfigError("unknown key", key)
        target, name, parse = _KEYS[key]
        if key == "run.temperature" and raw.lower() == "auto":
            values["run"]["fit_temperature"] = True
            continue
        try:
            values[target][name] = parse(raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {raw!r} ({exc})", key) from None

    mol = dict(values["molecule"])
    preset = MOLECULES.get(mol["name"])
    if preset is not None:
        mol = {**preset, **mol}
    else:
        for name in ("rotational_constant", "delta_alpha", "spin_weight_even", "spin_weight_odd"):
            if name not in mol:
                raise ConfigError(
                    f"required for non-builtin molecule {mol['name']!r}", f"molecule.{name}"
                )
    molecule = MoleculeSpec(**mol)
    pulse = PulseSpec(**values["pulse"])
    run = RunConfig(**values["run"])
    if run.fit_temperature:
        from .ensemble import fit_temperature

        run = replace(run, temperature=fit_temperature(molecule))
    return Configuration(molecule, pulse, run)


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: Configuration) -> str:
    """Serialize a resolved configuration; ``load_config`` inverts it."""
    by_target = {"molecule": asdict(config.molecule), "pulse": asdict(config.pulse),
                 "run": asdict(config.run)}
    lines = []
    for key, (target, name, _) in _KEYS.items():
        value = by_target[target][name]
        if key == "run.temperature" and config.run.fit_temperature:
            value = "auto"
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
