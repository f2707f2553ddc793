"""Flat ``section.key = value`` configuration for the command line.

Lines starting with ``#`` are comments.  List-valued keys separate entries
with ``;`` and numbers inside an entry with whitespace, e.g.

    robin.coeffs = 1 0 0; 1 1 1
    robin.arcs = -2.356 -0.785
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


DEFAULT_ARC = (-0.75 * np.pi, -0.25 * np.pi)
DEFAULT_COEFFS = ((1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, -1.0, 0.0), (1.0, 1.0, 1.0), (1.0, -1.0, 1.0))


@dataclass(frozen=True)
class LabConfig:
    n_r: int = 256
    n_theta: int = 512
    grading: float = 0.5
    focus: float | None = None  # None: chosen per epsilon
    fem_h: float = 0.05
    r0: float = 0.5
    cutoff_inner: float = 0.5
    eps_max: float = 1e-1
    eps_min: float = 1e-4
    eps_steps: int = 7
    arcs: tuple = (DEFAULT_ARC,)
    coeffs: tuple = DEFAULT_COEFFS
    cross_tol: float = 1e-2
    coercivity_tol: float = 1e-8
    check_tol: float = 1e-3
    seed: int = 0
    glue_depth: int = 3
    glue_eps_max: float = 1e-1
    glue_eps_min: float = 1e-3
    glue_steps: int = 5
    glue_calibrate: float = 10**-1.5
    glue_greedy: bool = False
    verify_n_r: int = 64
    verify_n_theta: int = 128
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("n_r", "n_theta", "eps_steps", "glue_steps", "verify_n_r", "verify_n_theta"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("fem_h", "eps_max", "eps_min", "glue_eps_max", "glue_eps_min", "glue_calibrate", "r0"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("cross_tol", "coercivity_tol", "check_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"tolerance {name} must be positive")
        if self.n_theta % 2:
            raise ConfigError("n_theta must be even")
        if self.grading < 0:
            raise ConfigError("grading must be non-negative")
        if self.focus is not None and not 0 < self.focus <= 1:
            raise ConfigError("focus must lie in (0, 1]")
        if not 0 < self.cutoff_inner < 1:
            raise ConfigError("cutoff_inner must lie in (0, 1)")
        if not 0 <= self.glue_depth <= 4:
            raise ConfigError("glue depth must lie in 0..4")
        _check_ladder(self.eps_max, self.eps_min, self.eps_steps, "eps")
        _check_ladder(self.glue_eps_max, self.glue_eps_min, self.glue_steps, "glue")
        if not self.arcs:
            raise ConfigError("at least one Robin arc is required")
        for arc in self.arcs:
            if len(arc) != 2 or not arc[0] < arc[1] or arc[1] - arc[0] >= 2 * np.pi:
                raise ConfigError(f"bad arc {arc}")
        for c in self.coeffs:
            if len(c) != 3 or not c[0] > 0 or not c[2] >= 0:
                raise ConfigError(f"bad Robin coefficients {c}: need alpha > 0 and gamma >= 0")

    @property
    def ladder(self) -> list[float]:
        return _ladder(self.eps_max, self.eps_min, self.eps_steps)

    @property
    def glue_ladder(self) -> list[float]:
        return _ladder(self.glue_eps_max, self.glue_eps_min, self.glue_steps)

    def with_overrides(self, **kwargs) -> "LabConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        try:
            return replace(self, **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _check_ladder(hi: float, lo: float, steps: int, name: str) -> None:
    if steps == 1:
        return
    if not hi > lo:
        raise ConfigError(f"{name} ladder must be strictly decreasing (max > min)")


def _ladder(hi: float, lo: float, steps: int) -> list[float]:
    if steps == 1:
        return [float(hi)]
    return [float(e) for e in np.geomspace(hi, lo, steps)]


# key in the file -> (field name, parser)
def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.split())


def _float_lists(text: str) -> tuple:
    return tuple(_floats(part) for part in text.split(";") if part.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str):
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


KEYS = {
    "grid.n_r": ("n_r", int),
    "grid.n_theta": ("n_theta", int),
    "grid.grading": ("grading", float),
    "grid.focus": ("focus", _optional_float),
    "fem.h": ("fem_h", float),
    "bubble.r0": ("r0", float),
    "bubble.cutoff_inner": ("cutoff_inner", float),
    "eps.max": ("eps_max", float),
    "eps.min": ("eps_min", float),
    "eps.steps": ("eps_steps", int),
    "robin.arcs": ("arcs", _float_lists),
    "robin.coeffs": ("coeffs", _float_lists),
    "tol.cross_solver": ("cross_tol", float),
    "tol.coercivity": ("coercivity_tol", float),
    "tol.check": ("check_tol", float),
    "run.seed": ("seed", int),
    "glue.depth": ("glue_depth", int),
    "glue.eps_max": ("glue_eps_max", float),
    "glue.eps_min": ("glue_eps_min", float),
    "glue.steps": ("glue_steps", int),
    "glue.calibrate_at": ("glue_calibrate", float),
    "glue.greedy": ("glue_greedy", _bool),
    "verify.n_r": ("verify_n_r", int),
    "verify.n_theta": ("verify_n_theta", int),
    "output.dir": ("out", str),
}

assert {name for name, _ in KEYS.values()} == {f.name for f in fields(LabConfig)}


def parse_config(text: str) -> LabConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, conv = KEYS[key]
        try:
            values[name] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return LabConfig(**values)


def load_config(path) -> LabConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def format_config(cfg: LabConfig) -> str:
    """Inverse of :func:`parse_config`."""
    lines = []
    for key, (name, _) in KEYS.items():
        v = getattr(cfg, name)
        if name in ("arcs", "coeffs"):
            text = "; ".join(" ".join(repr(float(x)) for x in entry) for entry in v)
        elif v is None:
            text = "auto"
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
