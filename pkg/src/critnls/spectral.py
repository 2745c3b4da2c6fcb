"""Periodic-grid fields and the Strang split-step integrator for i u_t + Δu = F(u)."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

logger = logging.getLogger(__name__)


class Side(enum.Enum):
    SPACE = "space"
    FREQUENCY = "frequency"


class IntegrationError(RuntimeError):
    """Raised when a time integration produces non-finite values."""

    def __init__(self, step: int, time: float):
        super().__init__(f"non-finite field at step {step} (t = {time:.6g})")
        self.step = step
        self.time = time


@dataclass(frozen=True)
class Grid:
    """Periodic box [-L/2, L/2)^d with ``n`` points per dimension."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError("points_per_dim must be a power of two >= 16")
        if not self.L > 0:
            raise ValueError("box_length must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.L

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / self.L

    @cached_property
    def x1(self) -> np.ndarray:
        return -self.L / 2 + self.dx * np.arange(self.n)

    @cached_property
    def xi1(self) -> np.ndarray:
        # FFT ordering
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x1] * self.d), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.xi1] * self.d), indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        return sum(c**2 for c in self.x)

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(c**2 for c in self.xi)

    @cached_property
    def _shift_phase(self) -> np.ndarray:
        # exp(i L xi / 2) per axis accounts for the grid starting at -L/2
        ph = np.exp(0.5j * self.L * self.xi1)
        out = ph
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, ph)
        return out

    def cell(self, side: Side) -> float:
        return (self.dx if side is Side.SPACE else self.dxi) ** self.d

    def fourier(self, values: np.ndarray) -> np.ndarray:
        """Unitary transform (2π)^{-d/2} ∫ e^{-ixξ} f dx sampled on the FFT lattice."""
        c = (self.dx / np.sqrt(2 * np.pi)) ** self.d
        return c * self._shift_phase * np.fft.fftn(values, axes=range(-self.d, 0))

    def inverse_fourier(self, values: np.ndarray) -> np.ndarray:
        c = (self.dx / np.sqrt(2 * np.pi)) ** self.d
        return np.fft.ifftn(values / self._shift_phase, axes=range(-self.d, 0)) / c

    def as_dict(self) -> dict:
        return {"d": self.d, "n": self.n, "L": self.L}


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    side: Side = Side.SPACE

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ValueError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def to_frequency(self) -> "Field":
        if self.side is Side.FREQUENCY:
            return self
        return Field(self.grid, self.grid.fourier(self.values), Side.FREQUENCY)

    def to_space(self) -> "Field":
        if self.side is Side.SPACE:
            return self
        return Field(self.grid, self.grid.inverse_fourier(self.values), Side.SPACE)

    def norm(self) -> float:
        """Discrete L² norm with the cell volume of the field's side."""
        return float(np.sqrt(self.grid.cell(self.side) * np.sum(np.abs(self.values) ** 2)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lp_norm(self, p: float) -> float:
        if np.isinf(p):
            return self.sup()
        return float((self.grid.cell(self.side) * np.sum(np.abs(self.values) ** p)) ** (1 / p))

    def xd_norm(self) -> float:
        """Norm of the Strichartz-type space X_d: L^∞ for d=1, L⁴ for d=2."""
        return self.lp_norm(np.inf if self.grid.d == 1 else 4)

    def __add__(self, other: "Field") -> "Field":
        _check_compatible(self, other)
        return Field(self.grid, self.values + other.values, self.side)

    def __sub__(self, other: "Field") -> "Field":
        _check_compatible(self, other)
        return Field(self.grid, self.values - other.values, self.side)

    def __mul__(self, c: complex) -> "Field":
        return Field(self.grid, c * self.values, self.side)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: Grid, side: Side = Side.SPACE) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex), side)


def _check_compatible(a: Field, b: Field):
    if a.grid != b.grid or a.side is not b.side:
        raise ValueError("fields live on different grids or sides")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Space-side fields on one grid at strictly monotone times."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray  # shape (len(times), *grid.shape)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (len(times),) + self.grid.shape:
            raise ValueError("trajectory values do not match times/grid")
        steps = np.diff(times)
        if len(times) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("trajectory times must be strictly monotone")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> Field:
        return Field(self.grid, self.values[i])

    def __iter__(self) -> Iterator[Field]:
        return (self[i] for i in range(len(self)))

    def reversed(self) -> "Trajectory":
        return Trajectory(self.grid, self.times[::-1].copy(), self.values[::-1].copy(), dict(self.meta))

    def scaled(self, c: complex) -> "Trajectory":
        return Trajectory(self.grid, self.times, c * self.values, dict(self.meta))

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if self.grid != other.grid or not np.array_equal(self.times, other.times):
            raise ValueError("trajectories are on different grids or time nodes")
        return Trajectory(self.grid, self.times, self.values - other.values)


def free_multiplier(grid: Grid, t: float) -> np.ndarray:
    return np.exp(-1j * t * grid.k2)


def free_propagate(f: Field, t: float) -> Field:
    """Apply U(t) = e^{itΔ} as the Fourier multiplier e^{-it|ξ|²}."""
    if t == 0:
        return f
    g = f.grid
    if f.side is Side.FREQUENCY:
        return Field(g, free_multiplier(g, t) * f.values, Side.FREQUENCY)
    ax = range(-g.d, 0)
    out = np.fft.ifftn(free_multiplier(g, t) * np.fft.fftn(f.values, axes=ax), axes=ax)
    return Field(g, out)


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask on the FFT lattice."""
    cut = (2.0 / 3.0) * grid.nyquist
    mask = np.ones(grid.shape, dtype=bool)
    for c in grid.xi:
        mask &= np.abs(c) < cut
    return mask


class SplitStepper:
    """Strang splitting: half free step, pointwise nonlinear flow, half free step.

    The nonlinear substep solves i u' = F(u) pointwise. For a pure
    gauge-invariant nonlinearity μ|u|^{2/d}u it is the exact phase rotation
    u·exp(-iμ|u|^{2/d}dt); otherwise one classical RK4 step is taken.
    """

    def __init__(self, grid: Grid, dt: float, nl, dealias: bool = False):
        if dt == 0:
            raise ValueError("dt must be nonzero")
        self.grid = grid
        self.dt = dt
        self.nl = nl
        self.half = free_multiplier(grid, dt / 2)
        self.mask = dealias_mask(grid) if dealias else None
        self._axes = tuple(range(-grid.d, 0))

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        nl, dt = self.nl, self.dt
        if nl is None or nl.is_zero:
            return u
        if nl.gauge is not None:
            return u * np.exp(-1j * nl.gauge * np.abs(u) ** (2 / nl.d) * dt)
        rhs = lambda v: -1j * nl.F(v)  # noqa: E731
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        return u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        ax = self._axes
        u = np.fft.ifftn(self.half * np.fft.fftn(u, axes=ax), axes=ax)
        u = self.nonlinear(u)
        uh = self.half * np.fft.fftn(u, axes=ax)
        if self.mask is not None:
            uh = uh * self.mask
        return np.fft.ifftn(uh, axes=ax)


def step_strang(u: Field, dt: float, nl, dealias: bool = False) -> Field:
    u = u.to_space()
    return Field(u.grid, SplitStepper(u.grid, dt, nl, dealias)(u.values))


def solve_interval(
    u0: Field,
    t0: float,
    t1: float,
    steps: int,
    nl,
    stride: int = 1,
    dealias: bool = False,
) -> Trajectory:
    """Integrate from t0 to t1 (either direction) with ``steps`` Strang steps.

    Records the initial field, every ``stride``-th step, and always the final
    field.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    u0 = u0.to_space()
    dt = (t1 - t0) / steps
    stepper = SplitStepper(u0.grid, dt, nl, dealias)
    u = u0.values
    times, fields = [t0], [u]
    for k in range(1, steps + 1):
        u = stepper(u)
        if not np.all(np.isfinite(u)):
            raise IntegrationError(k, t0 + k * dt)
        if k % stride == 0 or k == steps:
            times.append(t1 if k == steps else t0 + k * dt)
            fields.append(u)
    logger.debug("solve_interval %g -> %g in %d steps", t0, t1, steps)
    return Trajectory(u0.grid, np.array(times), np.array(fields))


def time_nodes(t_start: float, t_end: float, count: int) -> np.ndarray:
    """Geometric (constant-ratio) nodes from t_start to t_end inclusive."""
    if count < 2:
        raise ValueError("need at least two nodes")
    return np.geomspace(t_start, t_end, count)


def field_from_function(grid: Grid, func, side: Side = Side.SPACE) -> Field:
    coords = grid.x if side is Side.SPACE else grid.xi
    return Field(grid, func(*coords), side)


def relative_error(a: Field, b: Field) -> float:
    ref = b.norm()
    return (a - b).norm() / ref if ref > 0 else (a - b).norm()
