"""YAML scenario configuration, validation and seeded user drops.

Schema (every key optional; omitted keys take the defaults shown)::

    seed: 0
    algorithm: continuous        # continuous | discrete | baseline-<kind>
    geometry:
      M: 3
      N: 4
      K: 3
      D: 40.0                    # waveguide length and user-area side, m
      h: 5.0
      y: [-15.0, 0.0, 15.0]
      f_c: 28.0e9
      n_eff: 1.4
      delta_min: null            # null -> half a free-space wavelength
    motion:
      P_motor: 0.1               # W
      v: 1.0                     # m/s
      T1: 0.1
      T2: 0.9
      X_init: [8, 16, 24, 32]    # one row shared by all waveguides, or an M x N list
    users:
      placement: uniform         # uniform | explicit
      positions: null            # K x 2 list when explicit
      noise_dbm: -80.0
      gamma: 24.0                # number, or a string such as "13.8 dB"
      gamma_db: false            # true: numeric gamma is in dB
    admm: {}                     # any AdmmSettings field
    bcd: {}                      # any BcdSettings field
    grid:
      N_tilde: 5
      spacing_mode: uniform
    mimo_positions: null         # M x 3 list; null -> half-wavelength line at the origin
    sweep:
      axis: sinr                 # sinr | motion_power | grid_density | speed | area_scale
      values: [16, 20, 24, 28, 32]   # linear SINR targets here; W, Ntilde, m/s or D'/D elsewhere
      drops_per_point: 20
      algorithms: [continuous]

Uniform drops place users on [0, D] x [-D/2, D/2] at ground level using
numpy's PCG64 generator seeded with the pair (seed, drop index).

The environment variables ``PASSOPT_SEED`` and ``PASSOPT_OUT`` override the
seed and the output directory; nothing else is read from the environment.
"""
from __future__ import annotations

import os
import re
from dataclasses import fields
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from .admm import AdmmSettings
from .discrete import BcdSettings
from .model import MotionModel, Scenario, SystemGeometry, UserSet, db_to_linear, dbm_to_watts

ALGORITHMS = ("continuous", "discrete", "baseline-conventional-mimo",
              "baseline-equal-radiation-pass", "baseline-transmit-only-pass")
AXES = ("sinr", "motion_power", "grid_density", "speed", "area_scale")
ENV_SEED = "PASSOPT_SEED"
ENV_OUT = "PASSOPT_OUT"


class ConfigError(ValueError):
    """Schema or physics violation; the message names the offending field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryCfg(_Strict):
    M: int = 3
    N: int = 4
    K: int = 3
    D: float = 40.0
    h: float = 5.0
    y: list[float] = [-15.0, 0.0, 15.0]
    f_c: float = 28e9
    n_eff: float = 1.4
    delta_min: Optional[float] = None


class MotionCfg(_Strict):
    P_motor: float = 0.1
    v: float = 1.0
    T1: float = 0.1
    T2: float = 0.9
    X_init: Union[list[float], list[list[float]]] = [8.0, 16.0, 24.0, 32.0]


_DB = re.compile(r"^\s*(-?[0-9.eE+-]+)\s*dB\s*$")


class UsersCfg(_Strict):
    placement: Literal["uniform", "explicit"] = "uniform"
    positions: Optional[list[list[float]]] = None
    noise_dbm: Union[float, list[float]] = -80.0
    gamma: Union[float, str, list[float]] = 24.0
    gamma_db: bool = False

    @field_validator("gamma")
    @classmethod
    def _gamma_units(cls, v):
        if isinstance(v, str) and not _DB.match(v):
            raise ValueError(f"cannot read {v!r} as a number of dB")
        return v

    def gamma_linear(self) -> np.ndarray:
        if isinstance(self.gamma, str):
            return np.atleast_1d(db_to_linear(float(_DB.match(self.gamma).group(1))))
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        return db_to_linear(g) if self.gamma_db else g


class GridCfg(_Strict):
    N_tilde: int = 5
    spacing_mode: Literal["uniform"] = "uniform"


class SweepCfg(_Strict):
    axis: Literal["sinr", "motion_power", "grid_density", "speed", "area_scale"] = "sinr"
    values: list[float] = [16.0, 20.0, 24.0, 28.0, 32.0]
    drops_per_point: int = 20
    algorithms: list[str] = ["continuous"]

    @field_validator("values")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("sweep needs at least one value")
        return v

    @field_validator("algorithms")
    @classmethod
    def _known(cls, v):
        bad = [a for a in v if a not in ALGORITHMS]
        if bad or not v:
            raise ValueError(f"unknown algorithm(s) {bad}; choose from {list(ALGORITHMS)}")
        return v


class ScenarioConfig(_Strict):
    seed: int = 0
    algorithm: str = "continuous"
    geometry: GeometryCfg = GeometryCfg()
    motion: MotionCfg = MotionCfg()
    users: UsersCfg = UsersCfg()
    admm: dict = {}
    bcd: dict = {}
    grid: GridCfg = GridCfg()
    mimo_positions: Optional[list[list[float]]] = None
    sweep: SweepCfg = SweepCfg()
    out: str = "results"

    @field_validator("algorithm")
    @classmethod
    def _algo(cls, v):
        if v not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {v!r}; choose from {list(ALGORITHMS)}")
        return v

    # --- typed views -----------------------------------------------------

    def admm_settings(self) -> AdmmSettings:
        return _settings(AdmmSettings, self.admm, "admm")

    def bcd_settings(self) -> BcdSettings:
        return _settings(BcdSettings, self.bcd, "bcd")

    def geometry_obj(self) -> SystemGeometry:
        g = self.geometry
        return _physics("geometry", lambda: SystemGeometry(g.M, g.N, g.K, g.D, g.h, tuple(g.y),
                                                           g.f_c, g.n_eff, g.delta_min))

    def motion_obj(self, geom: SystemGeometry) -> MotionModel:
        m = self.motion
        X = np.asarray(m.X_init, dtype=float)
        if X.ndim == 1:
            X = np.tile(X, (geom.M, 1))
        return _physics("motion", lambda: MotionModel(m.P_motor, m.v, m.T1, m.T2, X))

    def user_positions(self, geom: SystemGeometry, drop: int) -> np.ndarray:
        u = self.users
        if u.placement == "explicit":
            if u.positions is None:
                raise ConfigError("users.positions: required when placement is explicit")
            pos = np.asarray(u.positions, dtype=float)
            if pos.shape != (geom.K, 2):
                raise ConfigError(f"users.positions: expected {geom.K} x 2, got {list(pos.shape)}")
            return pos
        return drop_users(self.seed, drop, geom.K, geom.D)

    def scenario(self, drop: int = 0) -> Scenario:
        geom = self.geometry_obj()
        motion = self.motion_obj(geom)
        pos = self.user_positions(geom, drop)
        u = self.users
        users = _physics("users", lambda: UserSet(pos, dbm_to_watts(np.asarray(u.noise_dbm, dtype=float)),
                                                  u.gamma_linear()))
        return _physics("scenario", lambda: Scenario(geom, motion, users))

    def validate(self) -> "ScenarioConfig":
        """Build every derived object once so physics errors surface before any solve."""
        self.scenario(0)
        self.admm_settings()
        self.bcd_settings()
        if self.mimo_positions is not None:
            pos = np.asarray(self.mimo_positions, dtype=float)
            if pos.ndim != 2 or pos.shape[1] != 3:
                raise ConfigError("mimo_positions: expected an M x 3 list")
        return self


def drop_users(seed: int, drop: int, K: int, side: float) -> np.ndarray:
    """Uniform ground positions on [0, side] x [-side/2, side/2] for one drop."""
    rng = np.random.Generator(np.random.PCG64([int(seed), int(drop)]))
    return np.c_[rng.uniform(0.0, side, K), rng.uniform(-side / 2, side / 2, K)]


def _settings(cls, values: dict, path: str):
    known = {f.name for f in fields(cls)}
    extra = sorted(set(values) - known)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}: unknown setting")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _physics(path, build):
    try:
        return build()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _format_error(exc: ValidationError) -> str:
    lines = []
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"])
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data: dict | None, env: dict | None = None) -> ScenarioConfig:
    env = os.environ if env is None else env
    data = dict(data or {})
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None
    upd = {}
    if env.get(ENV_SEED):
        try:
            upd["seed"] = int(env[ENV_SEED])
        except ValueError:
            raise ConfigError(f"{ENV_SEED}: not an integer") from None
    if env.get(ENV_OUT):
        upd["out"] = env[ENV_OUT]
    if upd:
        cfg = cfg.model_copy(update=upd)
    return cfg.validate()


def load_config(path: str | Path | None, env: dict | None = None) -> ScenarioConfig:
    """Read and validate a YAML file; ``None`` gives the defaults."""
    if path is None:
        return parse_config({}, env)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data, env)


def with_axis(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Copy of ``cfg`` with one sweep axis set to ``value``."""
    if axis == "sinr":
        users = cfg.users.model_copy(update={"gamma": float(value), "gamma_db": False})
        return cfg.model_copy(update={"users": users})
    if axis == "motion_power":
        return cfg.model_copy(update={"motion": cfg.motion.model_copy(update={"P_motor": float(value)})})
    if axis == "speed":
        return cfg.model_copy(update={"motion": cfg.motion.model_copy(update={"v": float(value)})})
    if axis == "grid_density":
        return cfg.model_copy(update={"grid": cfg.grid.model_copy(update={"N_tilde": int(value)})})
    if axis == "area_scale":
        s = float(value)
        g = cfg.geometry
        geom = g.model_copy(update={"D": g.D * s, "y": [v * s for v in g.y]})
        X = np.asarray(cfg.motion.X_init, dtype=float) * s
        motion = cfg.motion.model_copy(update={"X_init": X.tolist()})
        return cfg.model_copy(update={"geometry": geom, "motion": motion})
    raise ConfigError(f"sweep.axis: unknown axis {axis!r}")

