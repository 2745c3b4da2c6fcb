"""Error series against the profile, power-law decay fits, and the non-resonant Duhamel term."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .finalstate import (
    DEFAULT_MODES,
    DEFAULT_NODES,
    DuhamelQuadrature,
    TheoremParameters,
    check_window,
    resonant_coefficient,
)
from .nonlinearity import AngularFunction, fourier_coefficients, nonresonant_part
from .profile import FinalData, build_profile
from .spectral import Trajectory, time_nodes


@dataclass(frozen=True)
class Series:
    """A named time series; ``columns`` maps column name to values aligned with ``times``."""

    times: np.ndarray
    columns: dict

    def __getitem__(self, key: str) -> np.ndarray:
        return self.columns[key]

    def to_csv(self, path) -> None:
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + names)
            for i, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(self.columns[k][i])) for k in names])

    def rows(self) -> list:
        names = list(self.columns)
        return [[float(t)] + [float(self.columns[k][i]) for k in names] for i, t in enumerate(self.times)]


def error_series(traj: Trajectory, fd: FinalData, g1: float) -> Series:
    """‖u(t) - u_p(t)‖₂ and ‖u(t) - u_p(t)‖_{X_d} at every recorded time."""
    l2, xd = [], []
    for t, u in zip(traj.times, traj):
        diff = u - build_profile(fd, t, g1)
        l2.append(diff.norm())
        xd.append(diff.xd_norm())
    return Series(np.array(traj.times), {"l2_error": np.array(l2), "xd_norm": np.array(xd)})


def fit_decay(times, values, t_min: float, t_max: Optional[float] = None) -> tuple[float, float]:
    """OLS slope of -log(value) against log(t) over t_min ≤ t ≤ t_max.

    Returns (exponent, r²). A constant series has r² = 1 by convention.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = times >= t_min
    if t_max is not None:
        sel &= times <= t_max
    if sel.sum() < 4:
        raise ValueError(f"need at least 4 points with t >= {t_min:g}, got {int(sel.sum())}")
    if np.any(values[sel] <= 0):
        raise ValueError("decay fit needs strictly positive values")
    x = np.log(times[sel])
    y = -np.log(values[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot <= 1e-300 else 1 - np.sum(resid**2) / ss_tot
    return float(slope), float(r2)


def nonresonant_duhamel(
    fd: FinalData,
    nl: AngularFunction,
    p: TheoremParameters,
    nodes: Optional[np.ndarray] = None,
    modes: int = DEFAULT_MODES,
) -> Series:
    """‖∫_t^{T_max} U(t-s) N_d(u_p)(s) ds‖₂ on the quadrature nodes."""
    if modes < 32:
        raise ValueError("non-resonant measurement needs at least 32 modes")
    check_window(fd, p)
    nodes = time_nodes(p.T, p.T_max, DEFAULT_NODES) if nodes is None else np.asarray(nodes, float)
    if nl.gauge is not None or nl.is_zero:
        return Series(nodes, {"norm": np.zeros(len(nodes))})
    spec = fourier_coefficients(nl, modes)
    g1 = resonant_coefficient(nl, spec)
    quad = DuhamelQuadrature(fd.grid, nodes)

    def source(i):
        up = build_profile(fd, nodes[i], g1).values
        return nonresonant_part(spec, up, fd.grid.d)

    return Series(nodes, {"norm": quad.integrate_norms(source)})
