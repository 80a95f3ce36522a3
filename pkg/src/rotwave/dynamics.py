"""Single-rotor propagation through the pump pulse and field-free evolution.

Coefficients are stored per fixed M and per parity of J, since the
cos^2(theta) coupling conserves both.  Time is in fs with t = 0 at the pulse
peak; the pulse is integrated over [-cutoff*FWHM, +cutoff*FWHM].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .angular import cos2_band, parity_js
from .config import MoleculeSpec, PulseSpec, RunConfig, interaction_rate
from .constants import wavenumber_to_rad_per_fs


class ConvergenceError(RuntimeError):
    """Numerical propagation failed a convergence check."""


class TruncationError(ConvergenceError):
    def __init__(self, j_i: int, m_i: int, occupancy: float, j_max: int):
        super().__init__(
            f"initial state J={j_i}, M={m_i}: occupancy {occupancy:.3e} in the top two "
            f"levels at j_max={j_max}; increase run.j_max (try {j_max + 10})"
        )
        self.j_i, self.m_i, self.occupancy = j_i, m_i, occupancy


class NormDriftError(ConvergenceError):
    def __init__(self, j_i: int, m_i: int, drift: float, step: float):
        super().__init__(
            f"initial state J={j_i}, M={m_i}: norm drift {drift:.3e} at step {step:.4g} fs; "
            "increase run.steps_per_fwhm"
        )
        self.j_i, self.m_i, self.drift = j_i, m_i, drift


@dataclass(frozen=True)
class RotorState:
    """Coefficients F_J for J = j_offset, j_offset + 2, ... at ``reference_time``."""

    m: int
    j_offset: int
    coeffs: np.ndarray
    reference_time: float = 0.0

    @property
    def js(self) -> np.ndarray:
        return self.j_offset + 2 * np.arange(self.coeffs.size)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def populations(self) -> dict[int, float]:
        return {int(j): float(p) for j, p in zip(self.js, np.abs(self.coeffs) ** 2)}


@dataclass(frozen=True)
class PulseKernel:
    """Gaussian intensity envelope, W/m^2, centred on t = 0."""

    fwhm: float
    peak: float
    cutoff: float = 3.0

    @classmethod
    def from_spec(cls, pulse: PulseSpec) -> "PulseKernel":
        return cls(pulse.fwhm_duration, pulse.peak_intensity_si, pulse.envelope_cutoff)

    @property
    def t_start(self) -> float:
        return -self.cutoff * self.fwhm

    @property
    def t_end(self) -> float:
        return self.cutoff * self.fwhm

    def intensity(self, t):
        return self.peak * np.exp(-4.0 * math.log(2.0) * (np.asarray(t) / self.fwhm) ** 2)


def kick_strength(pulse: PulseKernel, molecule: MoleculeSpec) -> float:
    """Dimensionless integrated interaction (delta_alpha / 4 hbar) int E0^2 dt."""
    rate = -interaction_rate(molecule.delta_alpha, pulse.peak)
    return rate * pulse.fwhm * math.sqrt(math.pi / (4.0 * math.log(2.0)))


def rotational_frequency(j, rotational_constant: float):
    """E_J / hbar = 2 pi B c J(J+1) in rad/fs."""
    j = np.asarray(j)
    return wavenumber_to_rad_per_fs(rotational_constant) * j * (j + 1)


def _lowest_j(m: int, parity: int) -> int:
    lo = abs(m)
    return lo + 1 if (lo - parity) % 2 else lo


def initial_state(j_i: int, m_i: int, j_max: int, time: float = 0.0) -> RotorState:
    """Eigenstate |J_i, M_i> in the same-parity band up to ``j_max``."""
    if j_i < 0 or abs(m_i) > j_i or j_i > j_max:
        raise ValueError(f"need |M| <= J <= j_max, got J={j_i}, M={m_i}, j_max={j_max}")
    offset = _lowest_j(m_i, j_i % 2)
    coeffs = np.zeros(len(range(offset, j_max + 1, 2)), dtype=complex)
    coeffs[(j_i - offset) // 2] = 1.0
    return RotorState(m=m_i, j_offset=offset, coeffs=coeffs, reference_time=time)


def evolve_free(state: RotorState, delta_t: float, molecule: MoleculeSpec) -> RotorState:
    omega = rotational_frequency(state.js, molecule.rotational_constant)
    return replace(
        state,
        coeffs=state.coeffs * np.exp(-1j * omega * delta_t),
        reference_time=state.reference_time + delta_t,
    )


@dataclass(frozen=True)
class BandPropagator:
    """Schrodinger-picture propagators of one (M, parity) band.

    Column k of ``final`` is the state at ``t_end`` grown from the basis
    state ``initial_js[k]`` at ``t_start``; ``samples`` holds the same
    columns at requested in-pulse times.
    """

    m: int
    js: np.ndarray
    initial_js: np.ndarray
    t_start: float
    t_end: float
    final: np.ndarray
    samples: dict[float, np.ndarray]
    step: float


def _rk4_segment(y, t, t_stop, h_max, rhs):
    n = max(1, math.ceil((t_stop - t) / h_max - 1e-9))
    h = (t_stop - t) / n
    for i in range(n):
        t0 = t + i * h
        k1 = rhs(t0, y)
        k2 = rhs(t0 + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t0 + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t0 + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def band_propagators(
    bands,
    pulse: PulseKernel,
    molecule: MoleculeSpec,
    j_max: int,
    steps_per_fwhm: int = 1200,
    sample_times=(),
    j_initial_max: int | None = None,
) -> list[BandPropagator]:
    """Propagate every basis state J <= ``j_initial_max`` of each band.

    ``bands`` lists (M, parity) pairs.  Fixed-step classical RK4 in the
    interaction picture: with c_J = F_J exp(i w_J (t - t0)) the equations
    read dc/dt = -i u(t) D C D* c, where D = diag(exp(i w (t - t0))), C is
    the tridiagonal cos^2 block and u(t) = U(t)/hbar, so the field-free
    phases are carried exactly.  All bands are stepped together, zero-padded
    to a common size; padded rows have no coupling.
    """
    bands = list(bands)
    if j_initial_max is None:
        j_initial_max = j_max
    js_list = [parity_js(m, j_max, parity) for m, parity in bands]
    init_list = [js[js <= j_initial_max] for js in js_list]
    if any(js.size == 0 for js in init_list):
        raise ValueError(f"empty band in {bands} for j_max={j_max}")
    size = max(js.size for js in js_list)
    ncol = max(js.size for js in init_list)
    omega = np.zeros((len(bands), size))
    diag = np.zeros((len(bands), size, 1))
    upper = np.zeros((len(bands), size - 1, 1))
    y = np.zeros((len(bands), size, ncol), dtype=complex)
    for b, ((m, _), js) in enumerate(zip(bands, js_list)):
        n = js.size
        omega[b, :n] = rotational_frequency(js, molecule.rotational_constant)
        d, c = cos2_band(m, j_max).block(js)
        diag[b, :n, 0] = d
        upper[b, : n - 1, 0] = c
        y[b, np.arange(init_list[b].size), np.arange(init_list[b].size)] = 1.0

    rate_per_intensity = interaction_rate(molecule.delta_alpha, 1.0)
    t0, t1 = pulse.t_start, pulse.t_end
    h = pulse.fwhm / steps_per_fwhm

    gauss = -4.0 * math.log(2.0) / pulse.fwhm**2
    cache: dict[float, np.ndarray] = {}

    def phases(t):
        # RK4 revisits each midpoint and endpoint; keep the last few
        if t not in cache:
            if len(cache) > 4:
                cache.clear()
            cache[t] = np.exp(1j * omega * (t - t0))[..., None]
        return cache[t]

    def rhs(t, y):
        u = rate_per_intensity * pulse.peak * math.exp(gauss * t * t)
        phase = phases(t)
        x = phase.conj() * y
        cx = diag * x
        cx[:, :-1] += upper * x[:, 1:]
        cx[:, 1:] += upper * x[:, :-1]
        return (-1j * u) * phase * cx

    def to_schrodinger(y, t):
        return np.exp(-1j * omega * (t - t0))[..., None] * y

    stops = sorted({float(t) for t in sample_times if t0 < t < t1})
    t = t0
    samples = []
    for stop in stops:
        y = _rk4_segment(y, t, stop, h, rhs)
        t = stop
        samples.append(to_schrodinger(y, t))
    final = to_schrodinger(_rk4_segment(y, t, t1, h, rhs), t1)

    out = []
    for b, ((m, _), js, init) in enumerate(zip(bands, js_list, init_list)):
        n, k = js.size, init.size
        out.append(
            BandPropagator(
                m=m,
                js=js,
                initial_js=init,
                t_start=t0,
                t_end=t1,
                final=final[b, :n, :k].copy(),
                samples={stop: s[b, :n, :k].copy() for stop, s in zip(stops, samples)},
                step=h,
            )
        )
    return out


def band_propagator(
    m: int,
    parity: int,
    pulse: PulseKernel,
    molecule: MoleculeSpec,
    j_max: int,
    steps_per_fwhm: int = 1200,
    sample_times=(),
    j_initial_max: int | None = None,
) -> BandPropagator:
    return band_propagators(
        [(m, parity)], pulse, molecule, j_max, steps_per_fwhm, sample_times, j_initial_max
    )[0]


def check_column(prop: BandPropagator, column: int, config: RunConfig) -> tuple[float, float]:
    """Norm drift and top-two occupancy for one initial basis state; raises on failure."""
    j_i = int(prop.initial_js[column])
    vec = prop.final[:, column]
    drift = abs(1.0 - float(np.sum(np.abs(vec) ** 2)))
    top = float(np.sum(np.abs(vec[-2:]) ** 2)) if vec.size > 2 else 0.0
    if drift > config.norm_tolerance:
        raise NormDriftError(j_i, prop.m, drift, prop.step)
    if top > config.truncation_tolerance:
        raise TruncationError(j_i, prop.m, top, config.j_max)
    return drift, top


def propagate_pulse(
    state: RotorState, pulse: PulseKernel, molecule: MoleculeSpec, config: RunConfig
) -> RotorState:
    """State at the end of the pulse window (``reference_time = pulse.t_end``).

    The input is first carried field-free to the window start.  Raises
    :class:`NormDriftError` or :class:`TruncationError` when the result fails
    the tolerances in ``config``.
    """
    if abs(state.norm - 1.0) > config.norm_tolerance:
        raise ValueError(f"input state not normalized (norm {state.norm:.12g})")
    state = evolve_free(state, pulse.t_start - state.reference_time, molecule)
    occupied = np.flatnonzero(state.coeffs)
    k = int(occupied[-1]) + 1
    prop = band_propagator(
        state.m,
        state.j_offset % 2,
        pulse,
        molecule,
        int(state.js[-1]),
        config.steps_per_fwhm,
        j_initial_max=int(state.js[k - 1]),
    )
    coeffs = prop.final @ state.coeffs[:k]
    j_i = int(state.js[np.argmax(np.abs(state.coeffs))])
    drift = abs(1.0 - float(np.sum(np.abs(coeffs) ** 2)))
    if drift > config.norm_tolerance:
        raise NormDriftError(j_i, state.m, drift, prop.step)
    top = float(np.sum(np.abs(coeffs[-2:]) ** 2)) if coeffs.size > 2 else 0.0
    if top > config.truncation_tolerance:
        raise TruncationError(j_i, state.m, top, int(state.js[-1]))
    return RotorState(m=state.m, j_offset=state.j_offset, coeffs=coeffs, reference_time=pulse.t_end)
