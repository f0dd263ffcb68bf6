"""Suite configuration: a sectioned key-value file plus flag overrides.

The file parses and validates fully before any computation starts; unknown
sections or keys are rejected.  Command-line flags win over file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field as dc_field

from .catalog import validate_parameters
from .conformal import FrameSolverParams
from .errors import ConfigError, ConstructionError
from .geometry import DerivativeEngine
from .suites import SUITES, Tolerances

_KNOWN_KEYS = {
    "spacetime": {"preset"},  # plus free-form numeric parameters
    "fluid": {"preset"},
    "engine": {"mode", "h", "richardson"},
    "tolerances": {
        "tol_ad", "tol_fd", "inverse", "identity", "frame", "frame_closed",
        "quadrature_rel", "trajectory", "null_orthogonal", "current_weight",
        "stress_weight",
    },
    "samples": {"grid_per_axis", "random_points"},
    "conformal": {"weight", "seeded_factors"},
    "frame": {"grid_nodes", "interpolation"},
    "run": {"suites", "seed", "out", "format", "timing", "rays", "nonmetricity_pairs"},
    "geodesic": {"kind", "start", "tangent", "direction", "s_max"},
}
_PARAM_SECTIONS = {"spacetime", "fluid"}


@dataclass
class SuiteConfig:
    spacetime: str = "minkowski"
    fluid: str = "dust-rest"
    parameters: dict = dc_field(default_factory=dict)
    engine: DerivativeEngine = dc_field(default_factory=DerivativeEngine)
    tols: Tolerances = dc_field(default_factory=Tolerances)
    grid_per_axis: int = 5
    random_points: int = 64
    weight_override: int = None
    seeded_factors: int = 10
    frame_params: FrameSolverParams = dc_field(default_factory=FrameSolverParams)
    suites: tuple = tuple(SUITES)
    seed: int = 0
    out: str = "report.json"
    fmt: str = "json"
    timing: bool = True
    rays: int = 5
    nonmetricity_pairs: int = 20
    geodesic: dict = dc_field(default_factory=dict)

    @property
    def preset_name(self) -> str:
        return f"{self.spacetime}-{self.fluid}"

    def echo(self) -> dict:
        """Settings block embedded in reports."""
        return {
            "spacetime": self.spacetime,
            "fluid": self.fluid,
            "parameters": {k: float(v) for k, v in sorted(self.parameters.items())},
            "engine": {
                "mode": self.engine.mode,
                "h": self.engine.h,
                "richardson": self.engine.richardson,
            },
            "tolerances": {
                k: getattr(self.tols, k) for k in sorted(_KNOWN_KEYS["tolerances"])
            },
            "samples": {
                "grid_per_axis": self.grid_per_axis,
                "random_points": self.random_points,
            },
            "conformal": {
                "weight": "auto" if self.weight_override is None else self.weight_override,
                "seeded_factors": self.seeded_factors,
            },
            "frame": {
                "grid_nodes": self.frame_params.grid_nodes,
                "interpolation": self.frame_params.interpolation,
            },
            "suites": list(self.suites),
            "seed": self.seed,
            "rays": self.rays,
            "nonmetricity_pairs": self.nonmetricity_pairs,
        }


def _get_float(section, key, default):
    try:
        return float(section.get(key, default))
    except ValueError as exc:
        raise ConfigError(f"key {key!r} must be a number: {exc}") from exc


def _get_int(section, key, default):
    try:
        return int(section.get(key, default))
    except ValueError as exc:
        raise ConfigError(f"key {key!r} must be an integer: {exc}") from exc


def load_config(path: str = None, overrides: dict = None) -> SuiteConfig:
    """Parse, validate and resolve a configuration.

    ``overrides`` maps flag names (``suite``, ``seed``, ``out``,
    ``format``) onto values that replace the file's choices.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # preserve parameter case (e.g. H vs h)
    if path is not None:
        try:
            read = parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file: {exc}") from exc
        if not read:
            raise ConfigError(f"config file {path!r} not found or unreadable")

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        if section in _PARAM_SECTIONS:
            continue  # free-form numeric parameters validated by the builder
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    cfg = SuiteConfig()

    if parser.has_section("spacetime"):
        sec = parser["spacetime"]
        cfg.spacetime = sec.get("preset", cfg.spacetime)
        cfg.parameters.update(
            {k: _get_float(sec, k, 0.0) for k in sec if k != "preset"})
    if parser.has_section("fluid"):
        sec = parser["fluid"]
        cfg.fluid = sec.get("preset", cfg.fluid)
        cfg.parameters.update(
            {k: _get_float(sec, k, 0.0) for k in sec if k != "preset"})

    if parser.has_section("engine"):
        sec = parser["engine"]
        mode = sec.get("mode", "forward-dual")
        try:
            cfg.engine = DerivativeEngine(
                mode=mode,
                h=_get_float(sec, "h", 1e-4),
                richardson=_get_int(sec, "richardson", 0),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    if parser.has_section("tolerances"):
        sec = parser["tolerances"]
        kwargs = {k: _get_float(sec, k, getattr(Tolerances, k)) for k in sec}
        cfg.tols = Tolerances(**kwargs)

    if parser.has_section("samples"):
        sec = parser["samples"]
        cfg.grid_per_axis = _get_int(sec, "grid_per_axis", cfg.grid_per_axis)
        cfg.random_points = _get_int(sec, "random_points", cfg.random_points)

    if parser.has_section("conformal"):
        sec = parser["conformal"]
        weight = sec.get("weight", "auto")
        if weight != "auto":
            try:
                cfg.weight_override = int(weight)
            except ValueError as exc:
                raise ConfigError("conformal weight must be 'auto' or an integer") from exc
        cfg.seeded_factors = _get_int(sec, "seeded_factors", cfg.seeded_factors)

    if parser.has_section("frame"):
        sec = parser["frame"]
        interpolation = sec.get("interpolation", "cubic")
        if interpolation not in ("linear", "cubic"):
            raise ConfigError("frame interpolation must be 'linear' or 'cubic'")
        nodes = _get_int(sec, "grid_nodes", 0) if "grid_nodes" in sec else None
        cfg.frame_params = FrameSolverParams(
            grid_nodes=nodes,
            interpolation=interpolation,
        )

    if parser.has_section("run"):
        sec = parser["run"]
        if "suites" in sec:
            cfg.suites = tuple(sec.get("suites").split())
        cfg.seed = _get_int(sec, "seed", cfg.seed)
        cfg.out = sec.get("out", cfg.out)
        cfg.fmt = sec.get("format", cfg.fmt)
        timing = sec.get("timing", "on")
        if timing not in ("on", "off"):
            raise ConfigError("run timing must be 'on' or 'off'")
        cfg.timing = timing == "on"
        cfg.rays = _get_int(sec, "rays", cfg.rays)
        cfg.nonmetricity_pairs = _get_int(sec, "nonmetricity_pairs", cfg.nonmetricity_pairs)

    if parser.has_section("geodesic"):
        cfg.geodesic = dict(parser["geodesic"])

    for flag, value in (overrides or {}).items():
        if value is None:
            continue
        if flag == "suite":
            cfg.suites = tuple(value)
        elif flag == "seed":
            cfg.seed = int(value)
        elif flag == "out":
            cfg.out = value
        elif flag == "format":
            cfg.fmt = value
        else:
            raise ConfigError(f"unknown override {flag!r}")

    unknown = [s for s in cfg.suites if s not in SUITES]
    if unknown:
        raise ConfigError(
            f"unknown suites {unknown}; available: {', '.join(sorted(SUITES))}")
    if cfg.fmt not in ("json", "table"):
        raise ConfigError("format must be 'json' or 'table'")
    try:
        validate_parameters(cfg.preset_name, cfg.parameters)
    except ConstructionError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
