"""Alignment traces, angular densities, quantum carpets and the detector signal.

Angles are measured from the pump polarization.  Carpets use the midpoint
grid from :func:`theta_grid`, whose positive half coincides with Fejer
(first-kind Chebyshev) nodes in cos(theta); :func:`fejer_weights` integrates
functions of cos(theta) on it to spectral accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_legendre

from .angular import Cos2Band, cos2_band, cos2_diag, theta_functions
from .dynamics import RotorState, initial_state, rotational_frequency
from .ensemble import ThermalEnsemble


@dataclass(frozen=True)
class AlignmentTrace:
    times: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in shape")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")


@dataclass(frozen=True)
class QuantumCarpet:
    """Thermal angular probability per steradian, ``density[time, theta]``."""

    times: np.ndarray
    thetas: np.ndarray
    density: np.ndarray

    @property
    def theta_points(self) -> int:
        return self.thetas.size

    def integrate(self, f=None) -> np.ndarray:
        """2 pi int_0^pi density(theta) f(cos theta) sin(theta) dtheta per time."""
        n = self.thetas.size // 2
        half = self.density[:, n:]
        x = np.cos(self.thetas[n:])
        vals = half if f is None else half * f(x)
        return 2.0 * math.pi * vals @ fejer_weights(n)


def theta_grid(points: int) -> np.ndarray:
    """Midpoint grid over [-pi, pi], symmetric under theta -> -theta and theta -> pi - theta."""
    if points < 2 or points % 2:
        raise ValueError("theta grid needs an even number of points")
    n = points // 2
    positive = (np.arange(n) + 0.5) * (math.pi / n)
    return np.concatenate([-positive[::-1], positive])


def fejer_weights(n: int) -> np.ndarray:
    """Fejer first-rule weights for int_{-1}^{1} f(x) dx at x_k = cos((k + 1/2) pi / n)."""
    theta = (np.arange(n) + 0.5) * (math.pi / n)
    j = np.arange(1, n // 2 + 1)
    series = np.cos(2.0 * np.outer(theta, j)) / (4.0 * j**2 - 1.0)
    return (2.0 / n) * (1.0 - 2.0 * series.sum(axis=1))


# ---------------------------------------------------------------------------
# single states


def expectation_cos2(state: RotorState, band: Cos2Band) -> float:
    """<cos^2> = sum c_JJ |F_J|^2 + 2 Re sum c_J,J+2 F_J* F_J+2."""
    js = state.js
    if abs(band.m) != abs(state.m) or not band.covers(js):
        raise ValueError(
            f"band (M={band.m}, J {band.j_min}..{band.j_max}) does not cover state "
            f"(M={state.m}, J {js[0]}..{js[-1]})"
        )
    diag, couple = band.block(js)
    f = state.coeffs
    value = np.dot(diag, np.abs(f) ** 2) + 2.0 * np.real(np.dot(couple, np.conj(f[:-1]) * f[1:]))
    return float(value)


def angular_density(state: RotorState, theta) -> np.ndarray:
    """|Psi(theta)|^2 per steradian; independent of the azimuth at fixed M."""
    theta = np.asarray(theta, dtype=float)
    basis = theta_functions(state.js[:, None], state.m, theta.ravel()[None, :])
    amp = state.coeffs @ basis
    return (np.abs(amp) ** 2 / (2.0 * math.pi)).reshape(theta.shape)


# ---------------------------------------------------------------------------
# ensembles


def _groups(ensemble: ThermalEnsemble):
    """Members grouped by band layout: (m, j_offset, size) -> (indices, coeff matrix)."""
    groups: dict[tuple[int, int, int], list[int]] = {}
    for i, member in enumerate(ensemble.members):
        s = member.state
        groups.setdefault((abs(s.m), s.j_offset, s.coeffs.size), []).append(i)
    return groups


def _time_partition(ensemble: ThermalEnsemble, times: np.ndarray):
    """Split times into pre-pulse, in-pulse (served from history) and field-free."""
    pre = times <= ensemble.pulse_start
    free = times >= ensemble.snapshot_time
    inside = ~pre & ~free
    for t in times[inside]:
        if float(t) not in ensemble.history:
            raise ValueError(
                f"t={t} fs lies inside the pulse window ({ensemble.pulse_start}, "
                f"{ensemble.snapshot_time}) and was not recorded during propagation"
            )
    return pre, inside, free


def _initial_cos2(ensemble: ThermalEnsemble) -> float:
    return float(sum(m.weight * cos2_diag(m.j_i, m.m_i) for m in ensemble.members))


def _free_cos2(ensemble: ThermalEnsemble, times: np.ndarray) -> np.ndarray:
    """Field-free thermal <cos^2>(t) from the members at ``snapshot_time``."""
    values = np.zeros(times.size)
    dt = times - ensemble.snapshot_time
    b = ensemble.molecule.rotational_constant
    weights = ensemble.weights
    for (m, offset, size), idx in _groups(ensemble).items():
        js = offset + 2 * np.arange(size)
        diag, couple = cos2_band(m, int(js[-1])).block(js)
        f = np.array([ensemble.members[i].state.coeffs for i in idx])
        w = weights[idx]
        values += w @ (np.abs(f) ** 2 @ diag)
        coh = (w[:, None] * np.conj(f[:, :-1]) * f[:, 1:]).sum(axis=0) * couple
        beat = rotational_frequency(js[1:], b) - rotational_frequency(js[:-1], b)
        values += 2.0 * np.real(np.exp(-1j * np.outer(dt, beat)) @ coh)
    return values


def _history_cos2(ensemble: ThermalEnsemble, t: float) -> float:
    total = 0.0
    for member, state in zip(ensemble.members, ensemble.history[t]):
        band = cos2_band(abs(state.m), int(state.js[-1]))
        total += member.weight * expectation_cos2(state, band)
    return total


def alignment_trace(ensemble: ThermalEnsemble, times) -> AlignmentTrace:
    """Thermal <cos^2 theta>(t).

    Before the pulse the ensemble is the unpumped thermal state (1/3 up to
    rounding); in-pulse times are served from the propagation history.
    """
    times = np.asarray(times, dtype=float)
    values = np.empty(times.size)
    pre, inside, free = _time_partition(ensemble, times)
    values[pre] = _initial_cos2(ensemble)
    for i in np.flatnonzero(inside):
        values[i] = _history_cos2(ensemble, float(times[i]))
    values[free] = _free_cos2(ensemble, times[free])
    meta = {
        "molecule": ensemble.molecule.name,
        "rotational_constant": ensemble.molecule.rotational_constant,
        "temperature": ensemble.temperature,
    }
    return AlignmentTrace(times=times, values=values, metadata=meta)


def _folded(thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct angles in [0, pi/2] and the index mapping each theta onto them.

    Mirror partners can differ in the last bit once folded; rounding before
    the unique() merges them so that the reflected densities are identical.
    """
    a = np.abs(thetas)
    folded = np.minimum(a, math.pi - a)
    key = np.round(folded, 12)
    uniq, inverse = np.unique(key, return_inverse=True)
    reps = np.array([folded[inverse == k][0] for k in range(uniq.size)])
    return reps, inverse


def _density_columns(members, states, weights, angles: np.ndarray) -> np.ndarray:
    out = np.zeros(angles.size)
    for member, state, w in zip(members, states, weights):
        out += w * angular_density(state, angles)
    return out


def quantum_carpet(ensemble: ThermalEnsemble, times, thetas) -> QuantumCarpet:
    """density(t, theta) = sum_members weight * |Psi_member(t, theta)|^2.

    Evaluated on the distinct folded angles in [0, pi/2] and reflected, so the
    symmetries theta -> -theta and theta -> pi - theta hold exactly.
    """
    times = np.asarray(times, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    if np.any(np.abs(thetas) > math.pi):
        raise ValueError("thetas must lie in [-pi, pi]")
    angles, inverse = _folded(thetas)
    folded = np.zeros((times.size, angles.size))
    pre, inside, free = _time_partition(ensemble, times)

    weights = ensemble.weights
    if pre.any():
        start = [initial_state(m.j_i, m.m_i, m.j_i) for m in ensemble.members]
        folded[pre] = _density_columns(ensemble.members, start, weights, angles)
    for i in np.flatnonzero(inside):
        states = ensemble.history[float(times[i])]
        folded[i] = _density_columns(ensemble.members, states, weights, angles)

    dt = times[free] - ensemble.snapshot_time
    b = ensemble.molecule.rotational_constant
    free_cols = np.zeros((dt.size, angles.size))
    for (m, offset, size), idx in _groups(ensemble).items():
        js = offset + 2 * np.arange(size)
        basis = theta_functions(js[:, None], m, angles[None, :])  # (J, angle)
        f0 = np.array([ensemble.members[i].state.coeffs for i in idx])  # (member, J)
        phase = np.exp(-1j * np.outer(dt, rotational_frequency(js, b)))  # (t, J)
        amp = (phase[:, None, :] * f0[None, :, :]) @ basis  # (t, member, angle)
        free_cols += np.einsum("m,tma->ta", weights[idx], np.abs(amp) ** 2)
    folded[free] = free_cols / (2.0 * math.pi)
    return QuantumCarpet(times=times, thetas=thetas, density=folded[:, inverse])


# ---------------------------------------------------------------------------
# detector


def legendre_moments(carpet: QuantumCarpet, l_max: int | None = None) -> np.ndarray:
    """a_L(t) with density = sum_L a_L P_L(cos theta), by Fejer projection."""
    n = carpet.thetas.size // 2
    if l_max is None:
        l_max = n // 2
    x = np.cos(carpet.thetas[n:])
    w = fejer_weights(n)
    ls = np.arange(l_max + 1)
    p = eval_legendre(ls[:, None], x[None, :])  # (L, node)
    return (carpet.density[:, n:] * w) @ p.T * ((2 * ls + 1) / 2.0)


def cone_factors(l_max: int, half_angle: float) -> np.ndarray:
    """Mean of P_L(cos beta) over a cone of the given half-angle."""
    c = math.cos(half_angle)
    ls = np.arange(l_max + 1)
    out = np.ones(l_max + 1)
    if l_max >= 1:
        lo = eval_legendre(ls[1:] - 1, c)
        hi = eval_legendre(ls[1:] + 1, c)
        out[1:] = (lo - hi) / ((2 * ls[1:] + 1) * (1.0 - c))
    return out


def detector_signal(carpet: QuantumCarpet, theta_pump: float, half_angle: float) -> AlignmentTrace:
    """Cone-averaged density about the detector axis, normalized to unit mean.

    The detector axis sits at ``theta_pump`` from the pump polarization; by
    the addition theorem each Legendre moment of the density is scaled by
    P_L(cos theta_pump) times its cone factor.
    """
    if not half_angle > 0:
        raise ValueError("half_angle must be > 0")
    moments = legendre_moments(carpet)
    l_max = moments.shape[1] - 1
    ls = np.arange(l_max + 1)
    gain = eval_legendre(ls, math.cos(theta_pump)) * cone_factors(l_max, half_angle)
    raw = moments @ gain
    return AlignmentTrace(
        times=carpet.times,
        values=raw / raw.mean(),
        metadata={"theta_pump": theta_pump, "half_angle": half_angle, "mean_density": raw.mean()},
    )
