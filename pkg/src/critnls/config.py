"""Experiment configuration: flat key=value text (or JSON), overrides, validation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .finalstate import TheoremParameters, default_b
from .io import stable_hash
from .nonlinearity import PRESET_DIMENSION, preset
from .profile import SUPPORT_TOL, default_delta

EXPERIMENTS = ("classify", "scatter", "picard", "duhamel", "sweep")
SWEEPABLE = ("eps", "width", "steps", "T", "T_max", "b", "delta", "eta", "N", "nodes", "points")
MAX_GRID_POINTS = 2**24


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "classify"
    preset: str = "gauge1"
    d: Optional[int] = None
    points: Optional[int] = None
    L: Optional[float] = None
    delta: Optional[float] = None
    b: Optional[float] = None
    eta: float = 0.5
    T: float = 10.0
    T_max: float = 160.0
    steps: int = 1500
    stride: int = 10
    N: int = 64
    eps: float = 0.1
    width: float = 1.0
    nodes: int = 64
    picard_iters: int = 5
    dealias: bool = False
    samples: int = 10000
    seed: int = 0
    fit_min: Optional[float] = None
    fit_max: Optional[float] = None
    sweep_experiment: str = "scatter"
    sweep_key: str = "eps"
    sweep_values: str = ""
    workers: int = 2
    save_fields: bool = False
    out: Optional[str] = None

    # ---- derived values -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.d if self.d is not None else PRESET_DIMENSION.get(self.preset, 1)

    @property
    def delta_value(self) -> float:
        return default_delta(self.dim) if self.delta is None else self.delta

    @property
    def b_value(self) -> float:
        return default_b(self.dim, self.delta_value) if self.b is None else self.b

    @property
    def support_radius(self) -> float:
        """Radius where the Gaussian final data drops below the support tolerance."""
        return self.width * math.sqrt(2 * math.log(1 / SUPPORT_TOL))

    @property
    def box_length(self) -> float:
        if self.L is not None:
            return self.L
        # T_max sits just under the validity cap L/(4ξ_s)
        return 4 * self.support_radius * self.T_max * 1.02

    @property
    def grid_points(self) -> int:
        if self.points is not None:
            return self.points
        need = self.box_length * 2 * self.support_radius / math.pi
        return max(64, 1 << math.ceil(math.log2(need)))

    def theorem_parameters(self) -> TheoremParameters:
        return TheoremParameters(
            d=self.dim, delta=self.delta_value, b=self.b_value, eta=self.eta, T=self.T, T_max=self.T_max, eps=self.eps
        )

    def fit_window(self) -> tuple[float, float]:
        lo = 2 * self.T if self.fit_min is None else self.fit_min
        hi = self.T_max / 2 if self.fit_max is None else self.fit_max
        return lo, hi

    def sweep_list(self) -> list:
        if not self.sweep_values.strip():
            return []
        conv = _CONVERTERS[_FIELD_TYPES[self.sweep_key]]
        return [conv(v.strip(), self.sweep_key) for v in self.sweep_values.split(",")]

    # ---- serialization --------------------------------------------------

    def as_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        d = self.as_dict()
        d.pop("out")
        return stable_hash(d)

    def to_text(self) -> str:
        lines = []
        for k, v in self.as_dict().items():
            if v is not None:
                lines.append(f"{k}={_format(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        kwargs = {}
        for key, value in raw.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key '{key}'")
            kwargs[key] = _convert(key, value)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def with_overrides(self, pairs) -> "ExperimentConfig":
        raw = {}
        for item in pairs or ():
            key, value = _split_pair(item, "--override")
            raw[key] = value
        if not raw:
            return self
        merged = self.as_dict()
        for key, value in raw.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key '{key}'")
            merged[key] = value
        return ExperimentConfig.from_dict(merged)

    # ---- validation -----------------------------------------------------

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}; got '{self.experiment}'")
        if self.d is not None and self.d not in (1, 2):
            raise ConfigError("d must be 1 or 2")
        try:
            nl = preset(self.preset, d=self.d)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"preset: {exc.args[0] if exc.args else exc}") from None
        if self.d is not None and nl.d != self.d:
            raise ConfigError(f"d: preset '{self.preset}' is defined for d={nl.d}, got d={self.d}")
        positive_ints = ("steps", "stride", "N", "nodes", "picard_iters", "samples", "workers")
        for key in positive_ints:
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be a positive integer")
        if self.N < 2:
            raise ConfigError("N must be at least 2")
        if self.nodes < 2:
            raise ConfigError("nodes must be at least 2")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not self.width > 0:
            raise ConfigError("width must be positive")
        if self.L is not None and not self.L > 0:
            raise ConfigError("L must be positive")
        if self.points is not None:
            if self.points < 16 or self.points & (self.points - 1):
                raise ConfigError("points must be a power of two >= 16")
        try:
            self.theorem_parameters()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.experiment != "classify":
            self._validate_grid()
        lo, hi = self.fit_window()
        if not lo < hi:
            raise ConfigError(f"fit_min must be smaller than fit_max (got {lo:g} >= {hi:g})")
        if self.experiment == "sweep":
            if self.sweep_experiment not in EXPERIMENTS or self.sweep_experiment == "sweep":
                raise ConfigError("sweep_experiment must be one of classify, scatter, picard, duhamel")
            if self.sweep_key not in SWEEPABLE:
                raise ConfigError(f"sweep_key must be one of {', '.join(SWEEPABLE)}")
            values = self.sweep_list()
            if not values:
                raise ConfigError("sweep_values must list at least one value")
            for v in values:
                replace(self, experiment=self.sweep_experiment, **{self.sweep_key: v}).validate()

    def _validate_grid(self) -> None:
        n, L = self.grid_points, self.box_length
        total = n**self.dim
        if total > MAX_GRID_POINTS:
            raise ConfigError(
                f"points: grid of {n}^{self.dim} exceeds {MAX_GRID_POINTS} points; set L and points explicitly"
            )
        nyquist = math.pi * n / L
        xi_s = self.support_radius
        if xi_s >= nyquist:
            raise ConfigError(
                f"points must resolve the final data: support radius {xi_s:.3g} >= Nyquist {nyquist:.3g} "
                f"for points={n}, L={L:g}"
            )
        cap = L / (4 * xi_s)
        if self.T_max > cap:
            raise ConfigError(f"T_max must not exceed the validity cap L/(4 xi_s) = {cap:.4g} for L={L:g}")


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _as_int(v, key):
    if isinstance(v, bool):
        raise ConfigError(f"{key} expects an integer, got {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, float) and v.is_integer():
        return int(v)
    try:
        return int(str(v).strip())
    except ValueError:
        raise ConfigError(f"{key} expects an integer, got {v!r}") from None


def _as_float(v, key):
    if isinstance(v, bool):
        raise ConfigError(f"{key} expects a number, got {v!r}")
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} expects a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key} must be finite, got {v!r}")
    return x


def _as_bool(v, key):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("true", "1", "yes", "on"):
        return True
    if s in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key} expects true/false, got {v!r}")


def _as_str(v, key):
    if isinstance(v, (dict, list)):
        raise ConfigError(f"{key} expects a string, got {type(v).__name__}")
    return str(v).strip()


_CONVERTERS = {
    "int": _as_int,
    "float": _as_float,
    "bool": _as_bool,
    "str": _as_str,
    "Optional[int]": _as_int,
    "Optional[float]": _as_float,
    "Optional[str]": _as_str,
}


def _convert(key, value):
    typ = _FIELD_TYPES[key]
    if value is None or (typ.startswith("Optional") and str(value).strip().lower() in ("", "none", "null")):
        if not typ.startswith("Optional"):
            raise ConfigError(f"{key} must not be empty")
        return None
    return _CONVERTERS[typ](value, key)


def _split_pair(item: str, where: str):
    if "=" not in item:
        raise ConfigError(f"{where}: expected key=value, got {item!r}")
    key, value = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"{where}: empty key in {item!r}")
    return key, value.strip()


def parse_text(text: str, source: str = "config") -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = _split_pair(line, f"{source}:{lineno}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        raw[key] = value
    return raw


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if not text.strip():
        raise ConfigError(f"config {path} is empty")
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path}: JSON config must be an object")
    else:
        raw = parse_text(text, str(path))
    if not raw:
        raise ConfigError(f"config {path} has no keys")
    return ExperimentConfig.from_dict(raw)
