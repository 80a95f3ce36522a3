"""Impulsive alignment and rotational revivals of thermal rigid-rotor ensembles."""

from .analysis import (
    BeatSpectrum,
    assign_beats,
    beat_spectrum,
    find_extrema,
    revival_times,
    smooth,
)
from .angular import Cos2Band, cos2_band, cos2_couple, cos2_diag, quadrature_element
from .config import (
    ConfigError,
    Configuration,
    MoleculeSpec,
    PulseSpec,
    RunConfig,
    dump_config,
    field_amplitude_squared,
    interaction_energy,
    load_config,
)
from .dynamics import (
    ConvergenceError,
    NormDriftError,
    PulseKernel,
    RotorState,
    TruncationError,
    evolve_free,
    initial_state,
    propagate_pulse,
    rotational_frequency,
)
from .ensemble import PopulationTable, ThermalEnsemble, boltzmann_populations, build_ensemble
from .observables import (
    AlignmentTrace,
    QuantumCarpet,
    alignment_trace,
    angular_density,
    detector_signal,
    expectation_cos2,
    quantum_carpet,
    theta_grid,
)

__version__ = "0.1.0"
