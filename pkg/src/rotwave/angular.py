"""Matrix elements of cos^2(theta) between rigid-rotor states |J, M>.

Within a fixed M the operator couples J to J and J +/- 2 only.  The closed
forms are the production path; ``quadrature_element`` integrates normalized
associated Legendre functions numerically and serves as the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import sph_legendre_p


def _check(j: int, m: int) -> None:
    if j < 0 or abs(m) > j:
        raise ValueError(f"need J >= |M| >= 0, got J={j}, M={m}")


def cos2_diag(j: int, m: int) -> float:
    """<J M|cos^2|J M> = 1/3 + (2/3) [J(J+1) - 3M^2] / [(2J-1)(2J+3)]."""
    _check(j, m)
    return 1.0 / 3.0 + (2.0 / 3.0) * (j * (j + 1) - 3 * m * m) / ((2 * j - 1) * (2 * j + 3))


def cos2_couple(j: int, m: int) -> float:
    """<J+2 M|cos^2|J M>; symmetric in the two states."""
    _check(j, m)
    num = ((j + 1) ** 2 - m * m) * ((j + 2) ** 2 - m * m)
    return math.sqrt(num / ((2 * j + 1) * (2 * j + 5))) / (2 * j + 3)


def theta_functions(j: np.ndarray | int, m: int, theta: np.ndarray | float) -> np.ndarray:
    """Polar factors Theta_JM(theta) normalized to int_0^pi Theta^2 sin = 1.

    Broadcasts ``j`` against ``theta``.
    """
    return math.sqrt(2.0 * math.pi) * sph_legendre_p(j, m, theta)[0]


def quadrature_element(j1: int, j2: int, m: int, nodes: int | None = None) -> float:
    """Gauss-Legendre value of int_0^pi Theta_J1M cos^2 Theta_J2M sin dtheta."""
    _check(j1, m)
    _check(j2, m)
    if nodes is None:
        nodes = 2 * (j1 + j2) + 16
    if nodes < j1 + j2 + 3:
        raise ValueError(f"need at least {j1 + j2 + 3} nodes, got {nodes}")
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = np.arccos(x)
    integrand = theta_functions(j1, m, theta) * x**2 * theta_functions(j2, m, theta)
    return float(np.dot(w, integrand))


@dataclass(frozen=True)
class Cos2Band:
    """cos^2(theta) within one M, for J = |M| .. j_max.

    ``diag[k]`` belongs to J = |M| + k; ``couple[k]`` links J = |M| + k with
    J + 2.  Only same-parity J are coupled, so each parity forms its own
    tridiagonal block.
    """

    m: int
    j_max: int
    diag: np.ndarray
    couple: np.ndarray

    @property
    def j_min(self) -> int:
        return abs(self.m)

    def covers(self, js: np.ndarray) -> bool:
        return bool(js.size) and int(js[0]) >= self.j_min and int(js[-1]) <= self.j_max

    def block(self, js: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal entries for a same-parity run of J."""
        idx = np.asarray(js) - self.j_min
        return self.diag[idx], self.couple[idx[:-1]]

    def block_matrix(self, js: np.ndarray) -> np.ndarray:
        d, c = self.block(js)
        return np.diag(d) + np.diag(c, 1) + np.diag(c, -1)


def parity_js(m: int, j_max: int, parity: int) -> np.ndarray:
    """J values with the given parity, from the lowest allowed up to ``j_max``."""
    lo = abs(m)
    if (lo - parity) % 2:
        lo += 1
    return np.arange(lo, j_max + 1, 2)


def cos2_band(m: int, j_max: int) -> Cos2Band:
    if j_max < abs(m):
        raise ValueError(f"j_max={j_max} below |M|={abs(m)}")
    js = range(abs(m), j_max + 1)
    diag = np.array([cos2_diag(j, m) for j in js])
    couple = np.array([cos2_couple(j, m) for j in js if j + 2 <= j_max])
    return Cos2Band(m=m, j_max=j_max, diag=diag, couple=couple)
