"""Thermal populations with nuclear-spin statistics, and the pumped ensemble."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .config import REFERENCE_POPULATIONS_D2, ConfigError, MoleculeSpec, RunConfig
from .constants import CONSTANTS
from .dynamics import (
    BandPropagator,
    PulseKernel,
    RotorState,
    band_propagators,
    check_column,
)

THREADS_ENV = "ROTWAVE_THREADS"


class TailMassError(ValueError):
    """Population beyond the requested J cut exceeds the tolerance."""


@dataclass(frozen=True)
class PopulationTable:
    temperature: float
    js: np.ndarray
    populations: np.ndarray
    spin_weights: np.ndarray
    tail_mass: float = 0.0

    @property
    def per_m_weights(self) -> np.ndarray:
        return self.populations / (2 * self.js + 1)

    def __getitem__(self, j: int) -> float:
        return float(self.populations[j])


def _boltzmann_terms(temperature: float, molecule: MoleculeSpec, js: np.ndarray) -> np.ndarray:
    x = CONSTANTS.planck * CONSTANTS.speed_of_light_cm * molecule.rotational_constant
    x /= CONSTANTS.boltzmann * temperature
    g = np.where(js % 2 == 0, molecule.spin_weight_even, molecule.spin_weight_odd)
    return g * (2 * js + 1) * np.exp(-x * js * (js + 1))


def boltzmann_populations(
    temperature: float, molecule: MoleculeSpec, j_cut: int, tail_tolerance: float = 1e-5
) -> PopulationTable:
    """P(J) proportional to g_ns(J) (2J+1) exp(-hcB J(J+1) / kT), for J <= j_cut.

    The table is renormalized over the kept levels; the dropped mass is
    reported in ``tail_mass`` and must not exceed ``tail_tolerance``.
    """
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    if j_cut < 0:
        raise ValueError("j_cut must be >= 0")
    # reduced level spacing hcB/kT; levels with x J(J+1) > 60 are below 1e-26
    x = CONSTANTS.planck * CONSTANTS.speed_of_light_cm * molecule.rotational_constant
    x /= CONSTANTS.boltzmann * temperature
    j_total = max(j_cut + 1, int(math.sqrt(60.0 / x)) + 2)
    terms = _boltzmann_terms(temperature, molecule, np.arange(j_total + 1))
    full = terms / terms.sum()
    tail = float(full[j_cut + 1 :].sum())
    if tail > tail_tolerance:
        raise TailMassError(
            f"population above J={j_cut} is {tail:.3e} > {tail_tolerance:.1e}; raise the J cut"
        )
    js = np.arange(j_cut + 1)
    kept = terms[: j_cut + 1]
    g = np.where(js % 2 == 0, molecule.spin_weight_even, molecule.spin_weight_odd)
    return PopulationTable(temperature, js, kept / kept.sum(), g, tail)


def fit_temperature(
    molecule: MoleculeSpec,
    reference=REFERENCE_POPULATIONS_D2,
    bounds: tuple[float, float] = (290.0, 300.0),
) -> float:
    """Temperature in ``bounds`` minimizing the max deviation from ``reference``."""
    ref = np.asarray(reference)

    def deviation(t):
        table = boltzmann_populations(t, molecule, len(ref) + 20, tail_tolerance=1.0)
        return float(np.abs(table.populations[: ref.size] - ref).max())

    res = minimize_scalar(deviation, bounds=bounds, method="bounded", options={"xatol": 1e-3})
    # the bounded search never evaluates the end points themselves
    candidates = [(deviation(t), t) for t in (bounds[0], float(res.x), bounds[1])]
    return round(min(candidates)[1], 3)


@dataclass(frozen=True)
class EnsembleMember:
    j_i: int
    m_i: int  # |M|; the -M partner is folded into ``weight``
    state: RotorState
    weight: float


@dataclass(frozen=True)
class ThermalEnsemble:
    """Post-pulse states with thermal weights, all at ``snapshot_time``.

    ``history`` maps in-pulse times to the members' states at that time, in
    member order.  ``pulse_start`` is where the field switches on; before it
    every member is still its initial eigenstate.
    """

    members: tuple[EnsembleMember, ...]
    snapshot_time: float
    pulse_start: float
    molecule: MoleculeSpec
    temperature: float
    history: dict[float, tuple[RotorState, ...]] = field(default_factory=dict)
    diagnostics: dict[str, float] = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _bands_for(j_cut: int) -> list[tuple[int, int]]:
    return [
        (m, parity)
        for m in range(j_cut + 1)
        for parity in (0, 1)
        if m + (m - parity) % 2 <= j_cut
    ]


def build_ensemble(
    table: PopulationTable,
    pulse: PulseKernel,
    molecule: MoleculeSpec,
    config: RunConfig,
    record_times=(),
) -> ThermalEnsemble:
    """Propagate every (J_i, |M_i|) with J_i <= ``config.j_init_cut`` through the pulse.

    Weight is P(J_i)/(2J_i+1), doubled for M_i != 0 to account for -M_i.
    Members are ordered by (J_i, |M_i|).  Bands are split across
    ``ROTWAVE_THREADS`` workers; each band's arithmetic is independent of
    the split, so results do not depend on the thread count.
    """
    j_cut = min(config.j_init_cut, int(table.js[-1]))
    pops = table.populations[: j_cut + 1]
    pops = pops / pops.sum()

    bands = _bands_for(j_cut)
    workers = min(thread_count(), len(bands))
    chunks = [bands[i::workers] for i in range(workers)]

    def run(chunk):
        return band_propagators(
            chunk, pulse, molecule, config.j_max, config.steps_per_fwhm, record_times, j_cut
        )

    if workers == 1:
        results = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    props: dict[tuple[int, int], BandPropagator] = {}
    for chunk, res in zip(chunks, results):
        props.update(zip(chunk, res))

    members = []
    history_cols: list[tuple[BandPropagator, int]] = []
    max_drift = max_top = 0.0
    for j_i in range(j_cut + 1):
        for m in range(j_i + 1):
            prop = props[(m, j_i % 2)]
            col = int(np.searchsorted(prop.initial_js, j_i))
            drift, top = check_column(prop, col, config)
            max_drift, max_top = max(max_drift, drift), max(max_top, top)
            state = RotorState(
                m=m, j_offset=int(prop.js[0]), coeffs=prop.final[:, col], reference_time=prop.t_end
            )
            weight = pops[j_i] / (2 * j_i + 1) * (1 if m == 0 else 2)
            members.append(EnsembleMember(j_i, m, state, float(weight)))
            history_cols.append((prop, col))

    history = {}
    for t in sorted({float(t) for t in record_times if pulse.t_start < t < pulse.t_end}):
        history[t] = tuple(
            RotorState(m=p.m, j_offset=int(p.js[0]), coeffs=p.samples[t][:, c], reference_time=t)
            for p, c in history_cols
        )
    return ThermalEnsemble(
        members=tuple(members),
        snapshot_time=pulse.t_end,
        pulse_start=pulse.t_start,
        molecule=molecule,
        temperature=table.temperature,
        history=history,
        diagnostics={"max_norm_drift": max_drift, "max_truncation_occupancy": max_top},
    )


def two_level_ensemble(molecule: MoleculeSpec, j_max: int = 2) -> ThermalEnsemble:
    """Single member (|0,0> + |2,0>)/sqrt(2) at t = 0; a one-coherence test signal."""
    coeffs = np.zeros(j_max // 2 + 1, dtype=complex)
    coeffs[:2] = 1.0 / math.sqrt(2.0)
    state = RotorState(m=0, j_offset=0, coeffs=coeffs, reference_time=0.0)
    return ThermalEnsemble(
        members=(EnsembleMember(0, 0, state, 1.0),),
        snapshot_time=0.0,
        pulse_start=-math.inf,
        molecule=molecule,
        temperature=0.0,
    )
