"""Homogeneous critical nonlinearities F(u) = |u|^{1+2/d} g(arg u) and their Fourier modes."""

from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ZERO_TOL = 1e-9
MIN_SAMPLES = 4096
MIN_FIT_POINTS = 8
NOISE_FLOOR = 1e-12  # relative to the largest stored |g_n|


class RangeType(str, enum.Enum):
    LONG = "LongRange"
    SHORT = "ShortRange"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True, eq=False)
class AngularFunction:
    """The 2π-periodic function g(θ) = F(e^{iθ}) of a nonlinearity.

    Exactly one of ``func`` (closed form, vectorised over θ) or ``samples``
    (values at θ_k = 2πk/M, M a power of two) is given. ``direct`` is an
    optional closed form of F itself, used for speed on large grids.
    ``gauge`` marks the pure gauge-invariant case g = μe^{iθ} and holds μ.
    """

    d: int
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    samples: Optional[np.ndarray] = None
    name: str = "custom"
    direct: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gauge: Optional[float] = None
    is_zero: bool = False

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if (self.func is None) == (self.samples is None):
            raise ValueError("give exactly one of func or samples")
        if self.samples is not None:
            s = np.asarray(self.samples, dtype=complex)
            m = len(s)
            if m < 4 or m & (m - 1):
                raise ValueError("sample count must be a power of two")
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)

    @property
    def power(self) -> float:
        return 1 + 2 / self.d

    def g(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(theta), dtype=complex) * np.ones_like(theta)
        # periodic linear interpolation between samples
        m = len(self.samples)
        grid = 2 * np.pi * np.arange(m + 1) / m
        vals = np.append(self.samples, self.samples[0])
        th = np.mod(theta, 2 * np.pi)
        return np.interp(th, grid, vals.real) + 1j * np.interp(th, grid, vals.imag)

    def F(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        if self.is_zero:
            return np.zeros_like(u)
        if self.direct is not None:
            return np.asarray(self.direct(u), dtype=complex)
        r = np.abs(u)
        out = r**self.power * self.g(np.angle(u))
        return np.where(r > 0, out, 0)

    def sample(self, m: int) -> np.ndarray:
        if self.samples is not None:
            if m != len(self.samples):
                raise ValueError("sampled angular function has a fixed sample count")
            return np.asarray(self.samples)
        return self.g(2 * np.pi * np.arange(m) / m)

    def scaled(self, c: float) -> "AngularFunction":
        """The nonlinearity c·F."""
        func = None if self.func is None else (lambda th, f=self.func: c * f(th))
        samples = None if self.samples is None else c * self.samples
        direct = None if self.direct is None else (lambda u, f=self.direct: c * f(u))
        return AngularFunction(
            d=self.d,
            func=func,
            samples=samples,
            name=f"{c:g}*{self.name}",
            direct=direct,
            gauge=None if self.gauge is None else c * self.gauge,
            is_zero=self.is_zero or c == 0,
        )


def eval_F(nl: AngularFunction, u):
    """F_g(u) = |u|^{1+2/d} g(arg u), and 0 at u = 0."""
    out = nl.F(u)
    return out[()] if out.ndim == 0 else out


def _gauge(mu: float, d: int) -> AngularFunction:
    return AngularFunction(
        d=d,
        func=lambda th: mu * np.exp(1j * th),
        name=f"gauge{mu:g}",
        direct=lambda u: mu * np.abs(u) ** (2 / d) * u,
        gauge=float(mu),
    )


def _re_abs_re(th):
    c = np.cos(th)
    return np.abs(c) * c


def _re_im_mixed(th):
    c, s = np.cos(th), np.sin(th)
    return np.abs(c) * c - 1j * np.abs(s) * s


PRESET_DIMENSION = {"re-abs-re": 2, "cos3": 1, "u-squared": 2, "re-im-mixed": 2}
PRESET_NAMES = ("gauge{mu}",) + tuple(PRESET_DIMENSION)


def preset(name: str, d: Optional[int] = None) -> AngularFunction:
    """Look up a nonlinearity by name.

    ``gauge{mu}`` (e.g. ``gauge1``, ``gauge0.5``, ``gauge-2``) works in d=1 and
    d=2 (default 1); the other presets are tied to one dimension.
    """
    m = re.fullmatch(r"gauge(\{?)([-+0-9.eE]*)(\}?)", name)
    if m:
        mu = float(m.group(2)) if m.group(2) else 1.0
        return _gauge(mu, d or 1)
    if name not in PRESET_DIMENSION:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}")
    fixed = PRESET_DIMENSION[name]
    if d is not None and d != fixed:
        raise ValueError(f"preset {name!r} is critical only in d={fixed}")
    if name == "re-abs-re":
        return AngularFunction(2, _re_abs_re, name=name, direct=lambda u: np.abs(u.real) * u.real)
    if name == "cos3":
        return AngularFunction(1, lambda th: np.cos(th) ** 3, name=name, direct=lambda u: u.real**3)
    if name == "u-squared":
        return AngularFunction(2, lambda th: np.exp(2j * th), name=name, direct=lambda u: u * u)
    return AngularFunction(
        2,
        _re_im_mixed,
        name=name,
        direct=lambda u: np.abs(u.real) * u.real - 1j * np.abs(u.imag) * u.imag,
    )


@dataclass(frozen=True, eq=False)
class FourierSpectrum:
    """Coefficients g_n for -N ≤ n ≤ N plus a power-law tail fit |g_n| ≈ C|n|^{-p}.

    ``tail_exponent`` is +inf when every coefficient in the fit window is at
    the noise floor (band-limited g) and nan when too few are above it.
    """

    coefficients: np.ndarray  # index n + N
    truncation_order: int
    tail_exponent: float
    tail_constant: float = 0.0
    fit_count: int = 0
    tail_density: float = 0.0
    sample_count: int = 0
    d: int = 1
    name: str = "custom"

    @property
    def orders(self) -> np.ndarray:
        N = self.truncation_order
        return np.arange(-N, N + 1)

    def __getitem__(self, n: int) -> complex:
        N = self.truncation_order
        if abs(n) > N:
            return 0j
        return complex(self.coefficients[n + N])

    @property
    def g0(self) -> complex:
        return self[0]

    @property
    def g1(self) -> complex:
        return self[1]

    def reconstruct(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.exp(1j * np.multiply.outer(theta, self.orders)) @ self.coefficients

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "re", "im"])
            for n, c in zip(self.orders, self.coefficients):
                w.writerow([int(n), repr(float(c.real)), repr(float(c.imag))])


def read_spectrum_csv(path) -> dict[int, complex]:
    with open(path, newline="") as fh:
        return {int(r["n"]): complex(float(r["re"]), float(r["im"])) for r in csv.DictReader(fh)}


def fit_tail(orders: np.ndarray, coefficients: np.ndarray, N: int):
    """Least-squares fit of log|g_n| against log|n| over N/10 ≤ |n| ≤ N.

    Returns (exponent p, constant C, number of points used, density of
    above-floor coefficients in the window).
    """
    mags = np.abs(coefficients)
    floor = NOISE_FLOOR * max(mags.max(), np.finfo(float).tiny)
    window = (np.abs(orders) >= max(1, N / 10)) & (np.abs(orders) <= N)
    keep = window & (mags > floor)
    count = int(keep.sum())
    if count == 0:
        return np.inf, 0.0, 0, 0.0
    if count < MIN_FIT_POINTS:
        return np.nan, 0.0, count, count / window.sum()
    slope, intercept = np.polyfit(np.log(np.abs(orders[keep])), np.log(mags[keep]), 1)
    return float(-slope), float(np.exp(intercept)), count, count / window.sum()


def fourier_coefficients(nl: AngularFunction, N: int) -> FourierSpectrum:
    """g_n = (1/2π)∫ g(θ)e^{-inθ}dθ for |n| ≤ N by DFT of uniform samples."""
    if N < 1:
        raise ValueError("truncation order N must be >= 1")
    if nl.samples is not None:
        m = len(nl.samples)
        if 4 * N > m:
            raise ValueError(f"N={N} exceeds M/4 = {m // 4} for {m} samples")
    else:
        m = max(MIN_SAMPLES, 8 * N)
        m = 1 << (m - 1).bit_length()
    c = np.fft.fft(nl.sample(m)) / m
    orders = np.arange(-N, N + 1)
    coeffs = c[orders % m]
    p, C, count, density = fit_tail(orders, coeffs, N)
    return FourierSpectrum(
        coefficients=coeffs,
        truncation_order=N,
        tail_exponent=p,
        tail_constant=C,
        fit_count=count,
        tail_density=density,
        sample_count=m,
        d=nl.d,
        name=nl.name,
    )


@dataclass(frozen=True)
class ClassificationReport:
    g0: complex
    g1: complex
    g1_is_real: bool
    g0_is_zero: bool
    eta_tested: float
    partial_sum: float
    tail_estimate: float
    weighted_sum: float
    converges: bool
    range_type: RangeType
    tail_exponent: float
    truncation_order: int
    diagnostics: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "g0": [self.g0.real, self.g0.imag],
            "g1": [self.g1.real, self.g1.imag],
            "g1_is_real": self.g1_is_real,
            "g0_is_zero": self.g0_is_zero,
            "eta": self.eta_tested,
            "partial_sum": self.partial_sum,
            "tail_estimate": _finite_or_str(self.tail_estimate),
            "weighted_sum": _finite_or_str(self.weighted_sum),
            "converges": self.converges,
            "range_type": self.range_type.value,
            "tail_exponent": _finite_or_str(self.tail_exponent),
            "truncation_order": self.truncation_order,
            "diagnostics": list(self.diagnostics),
        }


def _finite_or_str(x: float):
    return x if np.isfinite(x) else str(x)


def weighted_partial_sum(spec: FourierSpectrum, eta: float) -> float:
    n = spec.orders
    nz = n != 0
    return float(np.sum(np.abs(n[nz]) ** (1 + eta) * np.abs(spec.coefficients[nz])))


def check_assumption(spec: FourierSpectrum, eta: float, tol: float = ZERO_TOL) -> ClassificationReport:
    """Test g₀ = 0, g₁ ∈ ℝ and Σ|n|^{1+η}|g_n| < ∞, then classify the range."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    g0, g1 = spec.g0, spec.g1
    g0_is_zero = abs(g0) <= tol
    g1_is_real = abs(g1.imag) <= tol
    partial = weighted_partial_sum(spec, eta)
    p = spec.tail_exponent
    N = spec.truncation_order
    diagnostics = []

    if np.isnan(p):
        converges = False
        tail = np.nan
        diagnostics.append(
            f"inconclusive tail fit: {spec.fit_count} coefficients above the noise floor "
            f"in the fit window (need {MIN_FIT_POINTS})"
        )
    elif np.isinf(p):
        converges = True
        tail = 0.0
        diagnostics.append("coefficients vanish beyond the fit window; treated as band-limited")
    else:
        decay = 1 + eta - p
        converges = decay < -1
        if converges:
            # ∫_{N+1/2}^∞ C n^{decay} dn over both signs, thinned by the window density
            a = N + 0.5
            tail = 2 * spec.tail_density * spec.tail_constant * a ** (decay + 1) / (-(decay + 1))
        else:
            tail = np.inf
            diagnostics.append(
                f"weighted terms decay like |n|^{decay:.3f}; the series diverges "
                f"(partial sum to N={N} is {partial:.6g})"
            )
    if not g0_is_zero:
        diagnostics.append(f"g0 = {g0:.3g} is nonzero; outside the supported class")
    if not g1_is_real:
        diagnostics.append(f"Im g1 = {g1.imag:.3g} is nonzero")

    if g0_is_zero and converges and abs(g1) <= tol:
        range_type = RangeType.SHORT
    elif g0_is_zero and converges and g1_is_real and abs(g1) > tol:
        range_type = RangeType.LONG
    else:
        range_type = RangeType.UNSUPPORTED
    return ClassificationReport(
        g0=g0,
        g1=g1,
        g1_is_real=g1_is_real,
        g0_is_zero=g0_is_zero,
        eta_tested=eta,
        partial_sum=partial,
        tail_estimate=float(tail),
        weighted_sum=float(partial + tail),
        converges=converges,
        range_type=range_type,
        tail_exponent=p,
        truncation_order=N,
        diagnostics=diagnostics,
    )


def eval_split(nl: AngularFunction, spec: FourierSpectrum, u):
    """Resonant part g₁|u|^{2/d}u and truncated non-resonant part Σ_{n≠0,1} g_n|u|^{1+2/d-n}u^n."""
    u = np.asarray(u, dtype=complex)
    r = np.abs(u)
    nz = r > 0
    z = np.where(nz, np.exp(1j * np.angle(u)), 0)
    amp = r ** (1 + 2 / nl.d)
    resonant = spec.g1 * amp * z
    nonresonant = amp * _angular_sum(spec, z, skip=(0, 1))
    nonresonant = np.where(nz, nonresonant, 0)
    if u.ndim == 0:
        return complex(resonant), complex(nonresonant)
    return resonant, nonresonant


def _angular_sum(spec: FourierSpectrum, z: np.ndarray, skip=()) -> np.ndarray:
    """Σ g_n z^n over stored n not in ``skip``, for |z| = 1, by repeated multiplication."""
    N = spec.truncation_order
    zc = np.conj(z)
    out = np.zeros_like(z)
    up = np.ones_like(z)
    down = np.ones_like(z)
    if 0 not in skip:
        out += spec[0]
    for n in range(1, N + 1):
        up = up * z
        down = down * zc
        if n not in skip:
            out += spec[n] * up
        if -n not in skip:
            out += spec[-n] * down
    return out


def nonresonant_part(spec: FourierSpectrum, u: np.ndarray, d: int) -> np.ndarray:
    """N_d(u) on arrays; zero wherever u = 0."""
    u = np.asarray(u, dtype=complex)
    r = np.abs(u)
    nz = r > 0
    z = np.where(nz, np.exp(1j * np.angle(u)), 0)
    return np.where(nz, r ** (1 + 2 / d) * _angular_sum(spec, z, skip=(0, 1)), 0)


def lipschitz_ratio(nl: AngularFunction, u, v) -> float:
    """max |F(u)-F(v)| / ((|u|^{2/d}+|v|^{2/d})|u-v|) over pairs with u ≠ v; 0 if none."""
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    keep = u != v
    if not keep.any():
        return 0.0
    u, v = u[keep], v[keep]
    e = 2 / nl.d
    num = np.abs(nl.F(u) - nl.F(v))
    den = (np.abs(u) ** e + np.abs(v) ** e) * np.abs(u - v)
    return float(np.max(num / den))


def sample_pairs(sample_count: int, seed: int):
    """Seeded pairs with log-uniform moduli in [1e-3, 1e3] and uniform angles."""
    rng = np.random.default_rng(seed)
    mod = 10.0 ** rng.uniform(-3, 3, size=(2, sample_count))
    ang = rng.uniform(0, 2 * np.pi, size=(2, sample_count))
    w = mod * np.exp(1j * ang)
    return w[0], w[1]


def lipschitz_check(nl: AngularFunction, sample_count: int, seed: int) -> float:
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    u, v = sample_pairs(sample_count, seed)
    return lipschitz_ratio(nl, u, v)


def lipschitz_constant_of_g(nl: AngularFunction, m: int = 1 << 16) -> float:
    """Discrete estimate of sup |g(θ)-g(θ')|/|θ-θ'| from neighbouring samples."""
    th = 2 * np.pi * np.arange(m + 1) / m
    gv = nl.g(th)
    return float(np.max(np.abs(np.diff(gv))) / (2 * np.pi / m))
