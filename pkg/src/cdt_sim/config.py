"""Flat key = value run configuration with strict parsing.

Every key has a default; the defaults describe the fabricated device and the
reference numerical grid. Unknown keys, duplicate keys and malformed lines are
errors.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from .errors import ParseError, ValidationError
from .geometry import Grid, SlabGrid, WaveguideGeometry
from .propagate import Absorber, Frame, Launch

_GEOMETRY_KEYS = ("lambda_probe", "n_s", "delta_n", "a", "w", "D_x", "D_y", "L", "A", "Lambda")


@dataclass(frozen=True)
class RunConfig:
    # device
    lambda_probe: float = 0.98
    n_s: float = 1.52
    delta_n: float = 0.0124
    a: float = 11.0
    w: float = 2.5
    D_x: float = 4.3
    D_y: float = 3.3
    L: float = 24000.0
    A: float = 0.0
    Lambda: float = 2000.0
    # grids
    x_min: float = -100.0
    x_max: float = 100.0
    dx: float = 0.05
    dz: float = 0.5
    y_max: float = 20.0
    dy: float = 0.05
    y_cover: float = 2.0
    absorber_width: float = 30.0
    absorber_strength: float = 0.05
    # runs
    calibrate: bool = True
    target_d12: float = 7940.0
    launch: str = "gaussian_left"
    launch_right: bool = False
    frame: str = "lab"
    z_end: float = 24000.0
    sample_every: float = 50.0
    scenario: str = "all"
    out_dir: str = "out"
    manifold_min: float = 500.0
    manifold_max: float = 2500.0
    manifold_samples: int = 21
    # rendering
    absorption_length: float = 6000.0
    per_frame_rescale: bool = False
    pgm_format: str = "P5"

    def __post_init__(self):
        for key in ("dx", "dz", "dy", "lambda_probe", "a", "w", "D_x", "D_y", "L", "Lambda", "z_end",
                    "sample_every", "target_d12", "absorption_length", "y_max", "manifold_min", "manifold_max"):
            value = getattr(self, key)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(key, "must be a positive finite number")
        if not self.x_max > self.x_min:
            raise ValidationError("x_max", "must exceed x_min")
        if not self.manifold_max >= self.manifold_min:
            raise ValidationError("manifold_max", "must not be below manifold_min")
        if self.manifold_samples < 1:
            raise ValidationError("manifold_samples", "must be at least 1")
        if self.A < 0:
            raise ValidationError("A", "must be non-negative")
        if self.absorber_width < 0 or self.absorber_strength < 0:
            raise ValidationError("absorber_width" if self.absorber_width < 0 else "absorber_strength",
                                  "must be non-negative")
        if not self.n_s > 1:
            raise ValidationError("n_s", "must exceed 1")
        if self.sample_every < self.dz:
            raise ValidationError("sample_every", "must be at least dz")
        if self.y_max < 5 * self.D_y:
            raise ValidationError("y_max", "must be at least 5 * D_y")
        for key, enum in (("launch", Launch), ("frame", Frame)):
            try:
                enum(getattr(self, key))
            except ValueError:
                raise ValidationError(key, f"must be one of {[e.value for e in enum]}") from None
        if self.pgm_format not in ("P2", "P5"):
            raise ValidationError("pgm_format", "must be P2 or P5")
        try:
            self.grid()
        except ValueError as exc:
            raise ValidationError("dx", str(exc)) from None

    def geometry(self) -> WaveguideGeometry:
        return WaveguideGeometry(**{k: getattr(self, k) for k in _GEOMETRY_KEYS})

    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.dx)

    def slab(self) -> SlabGrid:
        return SlabGrid(self.y_max, self.dy, self.y_cover)

    def absorber(self) -> Absorber | None:
        if self.absorber_width == 0 or self.absorber_strength == 0:
            return None
        return Absorber(self.absorber_width, self.absorber_strength)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValidationError(key, f"expected a boolean, got {raw!r}")
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(key, f"expected an integer, got {raw!r}") from None
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(key, f"expected a number, got {raw!r}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines (`#` starts a comment) into a validated RunConfig."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("missing key", lineno)
        if key not in _TYPES:
            raise ValidationError(key, "unknown key")
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        values[key] = _convert(key, raw)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def serialize_config(config: RunConfig) -> str:
    """Every key with its effective value; parse_config(serialize_config(c)) == c."""
    return "".join(f"{k} = {_format(v)}\n" for k, v in asdict(config).items())
