"""Experiment configuration, unit conversion and TOML loading."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .beam_solver import PgaParams
from .channel import FadingConfig, GeometryConfig
from .input_solver import InputSolverParams

DEFAULT_RHOS = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.95, 0.99, 1.0)
THRESHOLD_SCHEMES = ("dp", "smawk", "bisect", "ml")
INPUT_SCHEMES = ("kkt", "cooperative", "exhaustive", "equiprobable")
BEAM_SCHEMES = ("pga", "ergodic_mrt", "direct_mrt")


class ConfigError(ValueError):
    pass


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0) if np.ndim(dbm) \
        else 10.0 ** ((float(dbm) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(watts) + 30.0


@dataclass(frozen=True)
class ExperimentConfig:
    n_antennas: int = 4
    n_nodes: int = 8
    order: int = 2
    spreading: int = 20
    power: float = dbm_to_watts(36.0)
    noise_var: float = dbm_to_watts(-40.0)
    amplitude: float = 0.5
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    fading: FadingConfig = field(default_factory=FadingConfig)
    rhos: tuple = DEFAULT_RHOS
    iota: float = 0.0
    bits: int = 9
    confidence: float = 1e-3
    realizations: int = 1
    seed: int = 0
    threshold_scheme: str = "dp"
    input_scheme: str = "kkt"
    beam_scheme: str = "pga"
    # inside BCD the outer loop refines the inputs, so each block stops earlier
    input_params: InputSolverParams = field(
        default_factory=lambda: InputSolverParams(tolerance=1e-5, max_iterations=5000))
    pga_params: PgaParams = field(default_factory=PgaParams)
    bcd_tolerance: float = 1e-5
    bcd_max_iterations: int = 20
    threads: int = 1

    def __post_init__(self):
        if self.n_antennas < 1 or self.n_nodes < 0 or self.spreading < 1:
            raise ConfigError("need Q >= 1, K >= 0 and N >= 1")
        if self.power <= 0 or self.noise_var <= 0:
            raise ConfigError("power and noise variance must be positive")
        if not 0 < self.amplitude <= 1:
            raise ConfigError("amplitude ratio must lie in (0, 1]")
        if self.threshold_scheme not in THRESHOLD_SCHEMES:
            raise ConfigError(f"threshold scheme must be one of {THRESHOLD_SCHEMES}")
        if self.input_scheme not in INPUT_SCHEMES:
            raise ConfigError(f"input scheme must be one of {INPUT_SCHEMES}")
        if self.beam_scheme not in BEAM_SCHEMES:
            raise ConfigError(f"beam scheme must be one of {BEAM_SCHEMES}")
        if self.input_scheme == "exhaustive" and self.n_nodes != 1:
            raise ConfigError("exhaustive input search supports a single node only")
        rhos = tuple(float(r) for r in self.rhos)
        if not rhos or rhos[0] != 0 or any(b < a for a, b in zip(rhos, rhos[1:])) \
                or rhos[-1] > 1:
            raise ConfigError("rho grid must be ascending within [0, 1] and start at 0")
        object.__setattr__(self, "rhos", rhos)
        if self.order ** self.n_nodes > 2 ** self.bits:
            raise ConfigError("more hypotheses than threshold bins; raise bits")
        if self.iota < 0 or self.realizations < 1 or self.bits < 1:
            raise ConfigError("invalid iota, realization count or bits")
        if self.geometry.ap_node_distances is not None \
                and len(self.geometry.ap_node_distances) != self.n_nodes:
            raise ConfigError("explicit node distances do not match the node count")

    @property
    def power_dbm(self) -> float:
        return float(watts_to_dbm(self.power))

    @property
    def noise_dbm(self) -> float:
        return float(watts_to_dbm(self.noise_var))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def channel_hash(self) -> str:
        """Digest of every field that influences the channel draws."""
        d = self.to_dict()
        keys = ("n_antennas", "n_nodes", "geometry", "fading", "realizations", "seed")
        blob = json.dumps({k: d[k] for k in keys}, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()

    def result_dict(self) -> dict:
        """Every field that can change results (the worker count cannot)."""
        d = self.to_dict()
        d.pop("threads")
        return d

    def content_hash(self) -> str:
        blob = json.dumps(self.result_dict(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()


_NESTED = {
    "geometry": (GeometryConfig, {"ap_user_distance", "node_radius", "ap_node_distances",
                                  "node_user_distances"}),
    "fading": (FadingConfig, {f.name for f in dataclasses.fields(FadingConfig)}),
    "input_params": (InputSolverParams, {f.name for f in dataclasses.fields(InputSolverParams)}),
    "pga_params": (PgaParams, {f.name for f in dataclasses.fields(PgaParams)}),
}


def config_from_mapping(values: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from flat or sectioned key/values.

    ``power_dbm`` / ``noise_dbm`` are converted to watts.  Sections named like
    the nested dataclasses (``[fading]``, ``[geometry]``, ...) set their fields;
    flat keys matching a nested field name are routed there as well.
    """
    base = base or ExperimentConfig()
    top = {f.name for f in dataclasses.fields(ExperimentConfig)}
    changes: dict = {}
    nested: dict = {name: {} for name in _NESTED}
    for key, val in values.items():
        if key in _NESTED and isinstance(val, dict):
            nested[key].update(val)
        elif key == "power_dbm":
            changes["power"] = dbm_to_watts(val)
        elif key == "noise_dbm":
            changes["noise_var"] = dbm_to_watts(val)
        elif key in top:
            changes[key] = tuple(val) if isinstance(val, list) else val
        else:
            owner = next((n for n, (_, names) in _NESTED.items() if key in names), None)
            if owner is None:
                raise ConfigError(f"unknown configuration key {key!r}")
            nested[owner][key] = val
    for name, vals in nested.items():
        if vals:
            cls = _NESTED[name][0]
            unknown = set(vals) - _NESTED[name][1]
            if unknown:
                raise ConfigError(f"unknown {name} keys {sorted(unknown)}")
            vals = {k: tuple(v) if isinstance(v, list) else v for k, v in vals.items()}
            try:
                changes[name] = dataclasses.replace(getattr(base, name), **vals)
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc)) from exc
    try:
        return dataclasses.replace(base, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            values = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return config_from_mapping(values)
