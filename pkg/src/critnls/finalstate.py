"""Final-state problem: backward integration, Picard iteration of the Duhamel map, weighted norm.

With u_p = M D ŵ and κ = LOG_PHASE_RATE, the solution satisfies

    u(t) - u_p(t) = R(t)ŵ + i∫_t U(t-s)(F(u) - F(u_p)) ds
                    - i∫_t U(t-s) R(s)G_d(ŵ(s)) κ ds/s + i∫_t U(t-s) N_d(u_p) ds,

where every upper limit is truncated at T_max. The time integrals are
composite trapezoid sums of the interaction-picture integrands U(-s)f(s)
over the stored nodes, so U(t-s) is applied once per output node.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .nonlinearity import AngularFunction, FourierSpectrum, fourier_coefficients, nonresonant_part
from .profile import (
    LOG_PHASE_RATE,
    FinalData,
    build_profile,
    operator_R,
    operator_R_resonant,
    validity_window,
)
from .spectral import Field, Trajectory, free_multiplier, solve_interval, time_nodes

logger = logging.getLogger(__name__)

DEFAULT_NODES = 64
DEFAULT_MODES = 64


def gamma_for(d: int, delta: float) -> float:
    return delta / 2 if d == 1 else (delta + 2) / 6


def default_b(d: int, delta: float) -> float:
    """d/4 + 0.05, pulled back to the midpoint of (d/4, γ) when that overshoots γ."""
    return min(d / 4 + 0.05, (d / 4 + gamma_for(d, delta)) / 2)


@dataclass(frozen=True)
class TheoremParameters:
    d: int
    delta: float
    b: float
    eta: float
    T: float
    T_max: float
    eps: float = 0.1

    def __post_init__(self):
        d, delta = self.d, self.delta
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if not d / 2 < delta < (d + 1) / 2:
            raise ValueError(f"delta must lie in ({d / 2:g}, {(d + 1) / 2:g}) for d={d}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not delta - d / 2 < 2 * self.eta:
            raise ValueError("delta - d/2 must be smaller than 2*eta")
        if not d / 4 < self.b < self.gamma:
            raise ValueError(f"b must lie in (d/4, gamma) = ({d / 4:g}, {self.gamma:g})")
        if not 1 <= self.T < self.T_max:
            raise ValueError("T and T_max must satisfy 1 <= T < T_max")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def gamma(self) -> float:
        return gamma_for(self.d, self.delta)

    @classmethod
    def with_defaults(cls, d: int, **kw) -> "TheoremParameters":
        delta = kw.pop("delta", 0.75 if d == 1 else 1.25)
        b = kw.pop("b", None)
        if b is None:
            b = default_b(d, delta)
        eta = kw.pop("eta", 0.5)
        return cls(d=d, delta=delta, b=b, eta=eta, **kw)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["gamma"] = self.gamma
        return out


def resonant_coefficient(nl: AngularFunction, spec: Optional[FourierSpectrum] = None) -> float:
    """Real part of g₁ (the long-range coefficient)."""
    if nl.is_zero:
        return 0.0
    if nl.gauge is not None:
        return float(nl.gauge)
    spec = spec or fourier_coefficients(nl, DEFAULT_MODES)
    return float(spec.g1.real)


def check_window(fd: FinalData, p: TheoremParameters) -> dict:
    win = validity_window(fd)
    if not win["resolved"]:
        raise ValueError(
            f"final data support |xi| <= {win['support_radius']:.3g} exceeds the grid Nyquist "
            f"frequency {win['nyquist']:.3g}"
        )
    if p.T_max > win["t_max_cap"]:
        raise ValueError(
            f"T_max = {p.T_max:g} exceeds the validity cap {win['t_max_cap']:.4g} for box length "
            f"L = {fd.grid.L:g}"
        )
    return win


def construct_backward(
    fd: FinalData,
    nl: AngularFunction,
    p: TheoremParameters,
    steps: int,
    stride: int = 1,
    g1: Optional[float] = None,
    dealias: bool = False,
) -> Trajectory:
    """Set u(T_max) = u_p(T_max) and integrate backward to T.

    Returned in increasing time.
    """
    check_window(fd, p)
    g1 = resonant_coefficient(nl) if g1 is None else g1
    u_end = build_profile(fd, p.T_max, g1)
    traj = solve_interval(u_end, p.T_max, p.T, steps, nl, stride=stride, dealias=dealias)
    out = traj.reversed()
    out.meta.update({"g1": g1, "steps": steps})
    return out


def _cumulative_from_top(times: np.ndarray, h: np.ndarray) -> np.ndarray:
    """C_i = ∫_{t_i}^{t_last} h ds by the composite trapezoid rule (first axis is time)."""
    out = np.zeros_like(h)
    dt = np.diff(times)
    for i in range(len(times) - 2, -1, -1):
        out[i] = out[i + 1] + 0.5 * dt[i] * (h[i] + h[i + 1])
    return out


class DuhamelQuadrature:
    """U(t)-weighted trapezoid integrals ∫_t^{T_max} U(t-s) f(s) ds over fixed nodes."""

    def __init__(self, grid, nodes: np.ndarray):
        self.grid = grid
        self.nodes = np.asarray(nodes, dtype=float)
        self._axes = tuple(range(-grid.d, 0))

    def to_interaction(self, t: float, f: np.ndarray) -> np.ndarray:
        """Fourier coefficients of U(-t)f."""
        return free_multiplier(self.grid, -t) * np.fft.fftn(f, axes=self._axes)

    def from_interaction(self, t: float, fh: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(free_multiplier(self.grid, t) * fh, axes=self._axes)

    def integrate(self, f: np.ndarray) -> np.ndarray:
        """f has shape (nodes, *grid.shape); returns ∫_{t_i}^{T_max} U(t_i - s) f(s) ds per node."""
        h = np.stack([self.to_interaction(s, fs) for s, fs in zip(self.nodes, f)])
        c = _cumulative_from_top(self.nodes, h)
        return np.stack([self.from_interaction(t, ci) for t, ci in zip(self.nodes, c)])

    def integrate_norms(self, f_at) -> np.ndarray:
        """L² norms of ∫_{t_i}^{T_max} U(t_i - s) f(s) ds, streaming over nodes.

        ``f_at(i)`` returns f at node i; memory use is independent of the node count.
        """
        n = len(self.nodes)
        cell = self.grid.dx**self.grid.d
        norms = np.zeros(n)
        acc = np.zeros(self.grid.shape, dtype=complex)
        prev = self.to_interaction(self.nodes[-1], f_at(n - 1))
        for i in range(n - 2, -1, -1):
            cur = self.to_interaction(self.nodes[i], f_at(i))
            acc = acc + 0.5 * (self.nodes[i + 1] - self.nodes[i]) * (prev + cur)
            prev = cur
            # U(t) is unitary, so the norm can be taken in the interaction picture
            norms[i] = np.sqrt(cell * np.sum(np.abs(acc) ** 2) / acc.size)
        return norms


class PicardSolver:
    """Fixed-point iteration of the Duhamel map Φ on geometric time nodes in [T, T_max]."""

    def __init__(
        self,
        fd: FinalData,
        nl: AngularFunction,
        p: TheoremParameters,
        nodes: Optional[np.ndarray] = None,
        modes: int = DEFAULT_MODES,
    ):
        check_window(fd, p)
        self.fd, self.nl, self.p = fd, nl, p
        self.grid = fd.grid
        self.nodes = time_nodes(p.T, p.T_max, DEFAULT_NODES) if nodes is None else np.asarray(nodes, float)
        if not (np.isclose(self.nodes[0], p.T) and np.isclose(self.nodes[-1], p.T_max)):
            raise ValueError("quadrature nodes must span [T, T_max]")
        self.spec = None if nl.is_zero else fourier_coefficients(nl, modes)
        self.g1 = resonant_coefficient(nl, self.spec)
        self.quad = DuhamelQuadrature(self.grid, self.nodes)
        up, source = [], []
        rg, nd = [], []
        for s in self.nodes:
            u = build_profile(fd, s, self.g1)
            up.append(u.values)
            source.append(operator_R(fd, s, self.g1).values)
            if self.g1 != 0:
                rg.append(operator_R_resonant(fd, s, self.g1).values * (LOG_PHASE_RATE / s))
            else:
                rg.append(np.zeros(self.grid.shape, complex))
            if self.spec is None or nl.gauge is not None:
                nd.append(np.zeros(self.grid.shape, complex))
            else:
                nd.append(nonresonant_part(self.spec, u.values, self.grid.d))
        self.up = np.array(up)
        self.F_up = nl.F(self.up)
        # u_p + Rŵ - i∫U R G κ/s + i∫U N_d(u_p): independent of the iterate
        self.fixed = self.up + np.array(source) + 1j * self.quad.integrate(np.array(nd) - np.array(rg))

    def profile_trajectory(self) -> Trajectory:
        return Trajectory(self.grid, self.nodes, self.up)

    def phi(self, v: Trajectory) -> Trajectory:
        if v.grid != self.grid:
            raise ValueError("iterate lives on a different grid")
        if len(v.times) != len(self.nodes) or not np.allclose(v.times, self.nodes, rtol=1e-12):
            raise ValueError("iterate time nodes do not match the quadrature nodes")
        duhamel = self.quad.integrate(self.nl.F(v.values) - self.F_up)
        return Trajectory(self.grid, self.nodes, self.fixed + 1j * duhamel)

    def iterate(self, count: int, start: Optional[Trajectory] = None):
        """Return (iterates, sup_t t^b‖Φ^{k+1} - Φ^k‖₂ distances), starting from u_p."""
        v = start or self.profile_trajectory()
        iterates = [v]
        dists = []
        for _ in range(count):
            nxt = self.phi(v)
            dists.append(sup_weighted_l2(nxt - v, self.p.b))
            iterates.append(nxt)
            v = nxt
        return iterates, np.array(dists)


def picard_map(v: Trajectory, fd: FinalData, nl: AngularFunction, p: TheoremParameters, **kw) -> Trajectory:
    """One application of Φ at the nodes of ``v`` (which must span [T, T_max])."""
    return PicardSolver(fd, nl, p, nodes=v.times, **kw).phi(v)


def sup_weighted_l2(v: Trajectory, b: float) -> float:
    cell = v.grid.dx**v.grid.d
    l2 = np.sqrt(cell * np.sum(np.abs(v.values) ** 2, axis=tuple(range(1, v.values.ndim))))
    return float(np.max(v.times**b * l2))


def weighted_norm_terms(v: Trajectory, b: float) -> dict:
    """Both terms of the X_{d,T,b} norm with time integrals truncated at the last node."""
    g = v.grid
    if len(v) and v.times[0] > v.times[-1]:
        v = v.reversed()
    cell = g.dx**g.d
    axes = tuple(range(1, v.values.ndim))
    l2 = np.sqrt(cell * np.sum(np.abs(v.values) ** 2, axis=axes))
    if g.d == 1:
        xd = np.max(np.abs(v.values), axis=axes)
    else:
        xd = (cell * np.sum(np.abs(v.values) ** 4, axis=axes)) ** 0.25
    tail = _cumulative_from_top(v.times, xd**4)
    w = v.times**b
    sup_l2 = float(np.max(w * l2))
    sup_tail = float(np.max(w * tail**0.25))
    return {
        "sup_l2": sup_l2,
        "sup_strichartz": sup_tail,
        "norm": sup_l2 + sup_tail,
        "truncated_at": float(v.times[-1]),
        "tail_proxy": float(xd[-1]),
    }


def weighted_norm_X(v_minus_up: Trajectory, p: TheoremParameters) -> float:
    return weighted_norm_terms(v_minus_up, p.b)["norm"]
