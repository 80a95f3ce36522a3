"""Physical constants and the unit conversions used throughout the package.

Internal units: time in fs, angular frequency in rad/fs, energies carried as
E/hbar in rad/fs.  Rotational constants are in cm^-1, intensities in W/m^2
unless a name says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as _codata


@dataclass(frozen=True)
class PhysicalConstants:
    speed_of_light: float  # m/s
    vacuum_permittivity: float  # F/m
    reduced_planck: float  # J s
    planck: float  # J s
    boltzmann: float  # J/K

    @property
    def speed_of_light_cm(self) -> float:
        """Speed of light in cm/s."""
        return self.speed_of_light * 100.0


CONSTANTS = PhysicalConstants(
    speed_of_light=_codata.c,
    vacuum_permittivity=_codata.epsilon_0,
    reduced_planck=_codata.hbar,
    planck=_codata.h,
    boltzmann=_codata.k,
)

FS = 1e-15
ANGSTROM3 = 1e-30  # m^3
W_PER_CM2 = 1e4  # W/m^2

# c in cm/fs
C_CM_PER_FS = CONSTANTS.speed_of_light_cm * FS


def wavenumber_to_hz(wavenumber_cm: float) -> float:
    return wavenumber_cm * CONSTANTS.speed_of_light_cm


def hz_to_wavenumber(freq_hz: float) -> float:
    return freq_hz / CONSTANTS.speed_of_light_cm


def wavenumber_to_thz(wavenumber_cm: float) -> float:
    return wavenumber_to_hz(wavenumber_cm) * 1e-12


def wavenumber_to_rad_per_fs(wavenumber_cm: float) -> float:
    return 2.0 * np.pi * wavenumber_cm * C_CM_PER_FS


def joule_to_rad_per_fs(energy: float) -> float:
    return energy / CONSTANTS.reduced_planck * FS


def revival_period_fs(rotational_constant: float) -> float:
    """Full rotational revival time 1/(2Bc) in fs for B in cm^-1."""
    return 1.0 / (2.0 * rotational_constant * C_CM_PER_FS)
