"""Modified asymptotic profile u_p(t) = M(t)D(t)ŵ(t) and the free propagator.

M(t) multiplies by e^{i|x|²/4t}; D(t)f(x) = (2it)^{-d/2} f(x/2t).

The log-phase of ŵ(t) is g₁|û₊|^{2/d}·(log t)/2. The factor 1/2 comes from
|D(t)f|^{2/d} = |f|^{2/d}/(2t) for the equation i u_t + Δu = F(u): it is the
rate that makes L(MDŵ) reproduce the resonant term g₁|u_p|^{2/d}u_p.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.signal import czt

from .spectral import Field, Grid, Side, free_propagate

__all__ = [
    "LOG_PHASE_RATE",
    "FinalData",
    "ProfileWarning",
    "gaussian_final_data",
    "super_gaussian_final_data",
    "bump_final_data",
    "sampled_final_data",
    "default_delta",
    "validity_window",
    "hat_w",
    "build_profile",
    "operator_R",
    "operator_R_resonant",
    "free_propagate",
    "gaussian_free_solution",
]

LOG_PHASE_RATE = 0.5
SUPPORT_TOL = 1e-8


class ProfileWarning(UserWarning):
    pass


def default_delta(d: int) -> float:
    return 0.75 if d == 1 else 1.25


@dataclass(frozen=True, eq=False)
class FinalData:
    """Final state û₊ on the frequency lattice, optionally with a closed form.

    ``closed_form`` maps frequency coordinate arrays (one per axis) to û₊.
    """

    u_plus_hat: Field
    delta: float
    closed_form: Optional[Callable[..., np.ndarray]] = None
    name: str = "sampled"
    params: Optional[dict] = None

    def __post_init__(self):
        d = self.grid.d
        if not d / 2 < self.delta < (d + 1) / 2:
            raise ValueError(f"delta must lie in ({d / 2}, {(d + 1) / 2}) for d={d}")
        if self.u_plus_hat.side is not Side.FREQUENCY:
            object.__setattr__(self, "u_plus_hat", self.u_plus_hat.to_frequency())

    @property
    def grid(self) -> Grid:
        return self.u_plus_hat.grid

    @property
    def sup_norm(self) -> float:
        return self.u_plus_hat.sup()

    @property
    def l2_norm(self) -> float:
        return self.u_plus_hat.norm()

    @property
    def weighted_norm(self) -> float:
        """‖⟨x⟩^d u₊‖₂ on the spatial grid."""
        g = self.grid
        u = self.u_plus_hat.to_space()
        return Field(g, (1 + g.r2) ** (g.d / 2) * u.values).norm()

    @property
    def negative_sobolev_norm(self) -> float:
        """‖|ξ|^{-δ}û₊‖₂ with the zero mode dropped."""
        g = self.grid
        k = np.sqrt(g.k2)
        vals = np.where(k > 0, self.u_plus_hat.values / np.where(k > 0, k, 1) ** self.delta, 0)
        return Field(g, vals, Side.FREQUENCY).norm()

    def at(self, *xi: np.ndarray) -> np.ndarray:
        """û₊ at arbitrary frequency points."""
        if self.closed_form is not None:
            return np.asarray(self.closed_form(*xi), dtype=complex) * np.ones(np.broadcast(*xi).shape)
        raise ValueError("sampled final data has no pointwise evaluator; use build_profile")

    def scaled(self, c: float) -> "FinalData":
        cf = None if self.closed_form is None else (lambda *xi, f=self.closed_form: c * f(*xi))
        return FinalData(c * self.u_plus_hat, self.delta, cf, self.name, self.params)

    def norms(self) -> dict:
        return {
            "sup_hat": self.sup_norm,
            "l2": self.l2_norm,
            "H0d": self.weighted_norm,
            "Hdot_minus_delta": self.negative_sobolev_norm,
            "delta": self.delta,
        }


def _from_closed_form(grid, func, delta, name, params) -> FinalData:
    vals = func(*grid.xi)
    return FinalData(Field(grid, vals, Side.FREQUENCY), delta, func, name, params)


def gaussian_final_data(grid: Grid, eps: float = 0.1, width: float = 1.0, delta: Optional[float] = None) -> FinalData:
    """û₊(ξ) = ε exp(-|ξ|²/(2 width²)), so ‖û₊‖_∞ = ε."""

    def func(*xi):
        return eps * np.exp(-sum(c**2 for c in xi) / (2 * width**2)) + 0j

    delta = default_delta(grid.d) if delta is None else delta
    return _from_closed_form(grid, func, delta, "gaussian", {"eps": eps, "width": width})


def super_gaussian_final_data(
    grid: Grid, eps: float = 0.1, width: float = 1.0, order: int = 2, delta: Optional[float] = None
) -> FinalData:
    """û₊(ξ) = ε exp(-(|ξ|/width)^{2·order}): flat-topped, with a sharp but smooth edge."""

    def func(*xi):
        return eps * np.exp(-((sum(c**2 for c in xi) / width**2) ** order)) + 0j

    delta = default_delta(grid.d) if delta is None else delta
    return _from_closed_form(grid, func, delta, "super-gaussian", {"eps": eps, "width": width, "order": order})


def bump_final_data(grid: Grid, eps: float = 0.1, radius: float = 2.0, delta: Optional[float] = None) -> FinalData:
    """Smooth compactly supported û₊ = ε exp(1 - 1/(1-|ξ|²/radius²))."""

    def func(*xi):
        s = sum(c**2 for c in xi) / radius**2
        inside = s < 1
        return np.where(inside, eps * np.exp(1 - 1 / np.where(inside, 1 - s, 1)), 0) + 0j

    delta = default_delta(grid.d) if delta is None else delta
    return _from_closed_form(grid, func, delta, "bump", {"eps": eps, "radius": radius})


def sampled_final_data(grid: Grid, values: np.ndarray, delta: Optional[float] = None) -> FinalData:
    delta = default_delta(grid.d) if delta is None else delta
    return FinalData(Field(grid, values, Side.FREQUENCY), delta)


def support_radius(fd: FinalData, rel_tol: float = SUPPORT_TOL) -> float:
    """Largest |ξ| on the lattice where |û₊| exceeds rel_tol·‖û₊‖_∞."""
    mags = np.abs(fd.u_plus_hat.values)
    top = mags.max()
    if top == 0:
        return 0.0
    return float(np.sqrt(fd.grid.k2[mags > rel_tol * top].max()))


def validity_window(fd: FinalData, rel_tol: float = SUPPORT_TOL) -> dict:
    """Largest time for which the profile's support 2t·supp(û₊) fits in the box.

    Also reports whether the lattice resolves the support at all
    (support radius below the Nyquist frequency).
    """
    g = fd.grid
    xi_s = support_radius(fd, rel_tol)
    t_cap = np.inf if xi_s == 0 else g.L / (4 * xi_s)
    return {
        "support_radius": xi_s,
        "nyquist": g.nyquist,
        "resolved": bool(xi_s < g.nyquist),
        "t_max_cap": float(t_cap),
    }


def _log_phase(mod_hat: np.ndarray, t: float, g1: float, d: int) -> np.ndarray:
    return np.exp(-1j * LOG_PHASE_RATE * g1 * mod_hat ** (2 / d) * np.log(t))


def hat_w(fd: FinalData, t: float, g1: float) -> Field:
    """ŵ(t) = û₊ exp(-i g₁|û₊|^{2/d} (log t)/2) on the frequency lattice."""
    if t < 1:
        raise ValueError("hat_w is defined for t >= 1")
    u = fd.u_plus_hat.values
    if g1 == 0 or t == 1:
        return fd.u_plus_hat
    return Field(fd.grid, u * _log_phase(np.abs(u), t, g1, fd.grid.d), Side.FREQUENCY)


def _interpolate_hat(fd: FinalData, t: float) -> np.ndarray:
    """Trigonometric interpolant of the lattice samples at ξ = x/2t.

    û₊(ξ) = (dx/√2π)^d Σ_j u₊(x_j) e^{-i x_j ξ} reproduces the samples; the
    target points form a uniform tensor grid, so a chirp-z transform per axis
    evaluates it exactly.
    """
    g = fd.grid
    out = fd.u_plus_hat.to_space().values * (g.dx / np.sqrt(2 * np.pi)) ** g.d
    h = g.dx / (2 * t)
    xi0 = g.x1[0] / (2 * t)
    targets = g.x1 / (2 * t)
    w = np.exp(-1j * g.dx * h)
    a = np.exp(1j * g.dx * xi0)
    post = np.exp(0.5j * g.L * targets)
    for axis in range(g.d):
        out = np.moveaxis(czt(np.moveaxis(out, axis, -1), g.n, w, a), -1, axis)
        shape = [1] * g.d
        shape[axis] = g.n
        out = out * post.reshape(shape)
    outside = np.zeros(g.shape, dtype=bool)
    for c in g.x:
        outside |= np.abs(c / (2 * t)) > g.nyquist
    frac = outside.mean()
    if frac > 0.01:
        warnings.warn(
            f"x/2t leaves the frequency lattice at {100 * frac:.1f}% of grid points (t = {t:g}); "
            "treating û₊ as zero there",
            ProfileWarning,
            stacklevel=3,
        )
    return np.where(outside, 0, out)


def hat_at_profile_points(fd: FinalData, t: float) -> np.ndarray:
    g = fd.grid
    if fd.closed_form is not None:
        return fd.at(*(c / (2 * t) for c in g.x))
    return _interpolate_hat(fd, t)


def dilation_prefactor(d: int, t: float) -> complex:
    return (2j * t) ** (-d / 2)


def build_profile(fd: FinalData, t: float, g1: float) -> Field:
    """u_p(t, x) = (2it)^{-d/2} e^{i|x|²/4t} ŵ(t)(x/2t) on the spatial grid."""
    if t < 1:
        raise ValueError("build_profile is defined for t >= 1")
    g = fd.grid
    uh = hat_at_profile_points(fd, t)
    w = uh if g1 == 0 else uh * _log_phase(np.abs(uh), t, g1, g.d)
    vals = dilation_prefactor(g.d, t) * np.exp(1j * g.r2 / (4 * t)) * w
    return Field(g, vals)


def _apply_R(fd: FinalData, t: float, g1: float, op=None) -> Field:
    """M(t)D(t)(U(-1/4t) - 1) applied to op(ŵ(t)), op acting pointwise.

    Uses U(t)F^{-1} = M(t)D(t)U(-1/4t): the first term is U(t)F^{-1}op(ŵ)
    on the lattice, the second is the pointwise profile formula.
    """
    if t < 1:
        raise ValueError("R(t) is defined for t >= 1")
    g = fd.grid
    lattice = hat_w(fd, t, g1).values
    pts = hat_at_profile_points(fd, t)
    if g1 != 0:
        pts = pts * _log_phase(np.abs(pts), t, g1, g.d)
    if op is not None:
        lattice, pts = op(lattice), op(pts)
    free = free_propagate(Field(g, lattice, Side.FREQUENCY).to_space(), t)
    md = dilation_prefactor(g.d, t) * np.exp(1j * g.r2 / (4 * t)) * pts
    return free - Field(g, md)


def operator_R(fd: FinalData, t: float, g1: float) -> Field:
    """R(t)ŵ = M(t)D(t)(U(-1/4t) - 1)ŵ(t), computed as U(t)F^{-1}ŵ(t) - u_p(t)."""
    return _apply_R(fd, t, g1)


def operator_R_resonant(fd: FinalData, t: float, g1: float) -> Field:
    """R(t)G_d(ŵ(t)) with G_d(w) = g₁|w|^{2/d}w."""
    d = fd.grid.d
    return _apply_R(fd, t, g1, lambda w: g1 * np.abs(w) ** (2 / d) * w)


def gaussian_free_solution(grid: Grid, t: float, eps: float = 1.0, width: float = 1.0) -> Field:
    """Closed form of e^{itΔ}u₊ for û₊ = ε exp(-|ξ|²/(2 width²))."""
    a = 1 / width**2 + 2j * t
    return Field(grid, eps * a ** (-grid.d / 2) * np.exp(-grid.r2 / (2 * a)))
