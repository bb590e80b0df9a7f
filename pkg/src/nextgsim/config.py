"""Experiment configuration: one JSON document, strict validation, full defaults.

An empty document ``{}`` is a valid configuration: every module block has
documented defaults sufficient to run each experiment.  Unknown keys are
rejected at every level, and malformed or out-of-range values raise
distinct error classes carrying the offending field path.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

EXPERIMENT_NAMES = ("lsa_fig5", "smallcell_fig7", "fbmc_fig8", "pon_fig10", "entropy_table")


class ConfigError(Exception):
    """Base class for configuration problems (CLI exit code 2)."""


class ConfigParseError(ConfigError):
    """The document is not valid JSON or not a JSON object."""


class UnknownKeyError(ConfigError):
    """A key is not part of the schema."""


class InvalidValueError(ConfigError):
    """A value has the wrong type or is out of range."""


@dataclass
class LsaBlock:
    n_antennas: int = 20
    n_users: int = 4
    per_antenna_power: float = 1.0     # watts
    pathloss_exponent: float = 4.0
    noise_psd: float = 1e-9            # watts/Hz
    min_distance: float = 1e-3
    m_max: int = 20
    w_min_mhz: float = 0.5
    w_max_mhz: float = 50.0
    w_grid_points: int = 1000
    c_m: float = 1.0                   # cost units/s per antenna
    c_o: float = 0.5                   # cost units/s operative
    c_w_min: float = 1e-4              # spectrum cost sweep, cost units/s/MHz
    c_w_max: float = 1e3
    c_w_points: int = 15


@dataclass
class SmallcellBlock:
    d_scales: list = field(default_factory=lambda: [1.0, 0.5, 0.25])
    beta: float = 4.0
    l_side: float = 1600.0             # meters
    p0: float = 1.0                    # watts
    d0: float = 100.0                  # meters
    noise_power: float = 3.981e-14     # watts (~ -104 dBm)
    alpha_mode: str = "constant"       # "constant" or "uniform" in [0.5, 1.5]
    n_users: int = 512
    n_trials: int = 40


@dataclass
class FbmcBlock:
    l_list: list = field(default_factory=lambda: [32, 128, 512])
    n_list: list = field(default_factory=lambda: [1, 2, 4, 8, 16, 32, 64, 128])
    trials: int = 100
    rms_delay_spread: float = 1e-6     # seconds
    n_taps: int = 16


@dataclass
class PonBlock:
    group_sizes: list = field(default_factory=lambda: [1, 2, 4])
    load_points: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    sim_duration: float = 1.0          # seconds
    service_interval: int = 4          # frames


@dataclass
class EntropyBlock:
    n_channels: int = 6
    width: int = 256
    height: int = 256
    m_max: int = 6
    max_epochs: int = 1000
    bias_correction: bool = False


@dataclass
class ExperimentConfig:
    experiment: str | None = None
    seed: int = 0
    out_dir: str = "results"
    lsa: LsaBlock = field(default_factory=LsaBlock)
    smallcell: SmallcellBlock = field(default_factory=SmallcellBlock)
    fbmc: FbmcBlock = field(default_factory=FbmcBlock)
    pon: PonBlock = field(default_factory=PonBlock)
    entropy: EntropyBlock = field(default_factory=EntropyBlock)


_BLOCK_TYPES = {"lsa": LsaBlock, "smallcell": SmallcellBlock, "fbmc": FbmcBlock,
                "pon": PonBlock, "entropy": EntropyBlock}


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise InvalidValueError(f"{path}: {message}")


def _coerce(value, target_type, path: str):
    if target_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidValueError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidValueError(f"{path}: expected an integer, got {value!r}")
        return value
    if target_type is bool:
        if not isinstance(value, bool):
            raise InvalidValueError(f"{path}: expected a boolean, got {value!r}")
        return value
    if target_type is list:
        if not isinstance(value, list) or not value:
            raise InvalidValueError(f"{path}: expected a non-empty list, got {value!r}")
        out = []
        for i, item in enumerate(value):
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise InvalidValueError(f"{path}[{i}]: expected a number, got {item!r}")
            out.append(item)
        return out
    if not isinstance(value, str):
        raise InvalidValueError(f"{path}: expected a string, got {value!r}")
    return value


def _build_block(block_type, doc: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(block_type)}
    for key in doc:
        if key not in fields:
            raise UnknownKeyError(f"{path}.{key}: unknown key")
    kwargs = {}
    for name, f in fields.items():
        if name in doc:
            target = f.type if isinstance(f.type, type) else {"int": int, "float": float,
                                                              "bool": bool, "list": list,
                                                              "str": str}[f.type]
            kwargs[name] = _coerce(doc[name], target, f"{path}.{name}")
    return block_type(**kwargs)


def _validate(config: ExperimentConfig):
    if config.experiment is not None:
        _require(config.experiment in EXPERIMENT_NAMES, "experiment",
                 f"unknown experiment {config.experiment!r}; choose from {EXPERIMENT_NAMES}")
    _require(0 <= config.seed < 2**64, "seed", "must be a 64-bit unsigned integer")

    b = config.lsa
    _require(b.n_antennas >= 1, "lsa.n_antennas", "must be >= 1")
    _require(b.n_users >= 1, "lsa.n_users", "must be >= 1")
    _require(b.per_antenna_power > 0, "lsa.per_antenna_power", "must be positive")
    _require(b.pathloss_exponent >= 2, "lsa.pathloss_exponent", "must be >= 2")
    _require(b.noise_psd > 0, "lsa.noise_psd", "must be positive")
    _require(b.min_distance > 0, "lsa.min_distance", "must be positive")
    _require(1 <= b.m_max <= b.n_antennas, "lsa.m_max", "must be in [1, n_antennas]")
    _require(0 < b.w_min_mhz < b.w_max_mhz, "lsa.w_min_mhz", "need 0 < w_min < w_max")
    _require(b.w_grid_points >= 2, "lsa.w_grid_points", "must be >= 2")
    _require(b.c_m >= 0 and b.c_o >= 0, "lsa.c_m", "costs must be non-negative")
    _require(0 < b.c_w_min < b.c_w_max, "lsa.c_w_min", "need 0 < c_w_min < c_w_max")
    _require(b.c_w_points >= 2, "lsa.c_w_points", "must be >= 2")

    b = config.smallcell
    _require(all(0 < d <= 1 for d in b.d_scales), "smallcell.d_scales", "entries must be in (0, 1]")
    _require(b.l_side > 0 and b.d0 > 0 and b.p0 > 0, "smallcell.l_side", "lengths and power must be positive")
    _require(b.noise_power > 0, "smallcell.noise_power", "must be positive")
    _require(b.alpha_mode in ("constant", "uniform"), "smallcell.alpha_mode",
             "must be 'constant' or 'uniform'")
    _require(b.n_users >= 1 and b.n_trials >= 1, "smallcell.n_users", "must be >= 1")

    b = config.fbmc
    _require(all(int(l) == l and l >= 2 and (int(l) & (int(l) - 1)) == 0 for l in b.l_list),
             "fbmc.l_list", "entries must be powers of two")
    _require(all(int(n) == n and n >= 1 for n in b.n_list), "fbmc.n_list", "entries must be positive integers")
    _require(b.trials >= 1, "fbmc.trials", "must be >= 1")
    _require(b.rms_delay_spread > 0, "fbmc.rms_delay_spread", "must be positive")
    _require(b.n_taps >= 1, "fbmc.n_taps", "must be >= 1")

    b = config.pon
    _require(all(int(n) == n and n >= 1 for n in b.group_sizes), "pon.group_sizes",
             "entries must be positive integers")
    _require(all(l > 0 for l in b.load_points), "pon.load_points", "entries must be positive")
    _require(b.sim_duration > 0, "pon.sim_duration", "must be positive")
    _require(b.service_interval >= 1, "pon.service_interval", "must be >= 1")

    b = config.entropy
    _require(b.n_channels >= 2, "entropy.n_channels", "must be >= 2")
    _require(b.width >= 8 and b.height >= 8, "entropy.width", "grid must be at least 8x8")
    _require(1 <= b.m_max <= 6, "entropy.m_max", "must be in [1, 6]")
    _require(b.max_epochs >= 1, "entropy.max_epochs", "must be >= 1")


def build_config(doc: dict) -> ExperimentConfig:
    """Validate a parsed JSON object and return the fully defaulted config."""
    if not isinstance(doc, dict):
        raise ConfigParseError("top level must be a JSON object")
    top_keys = {"experiment", "seed", "out_dir"} | set(_BLOCK_TYPES)
    for key in doc:
        if key not in top_keys:
            raise UnknownKeyError(f"{key}: unknown key")
    kwargs = {}
    if "experiment" in doc:
        kwargs["experiment"] = _coerce(doc["experiment"], str, "experiment")
    if "seed" in doc:
        kwargs["seed"] = _coerce(doc["seed"], int, "seed")
    if "out_dir" in doc:
        kwargs["out_dir"] = _coerce(doc["out_dir"], str, "out_dir")
    for name, block_type in _BLOCK_TYPES.items():
        if name in doc:
            if not isinstance(doc[name], dict):
                raise InvalidValueError(f"{name}: expected an object")
            kwargs[name] = _build_block(block_type, doc[name], name)
    config = ExperimentConfig(**kwargs)
    _validate(config)
    return config


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return build_config(doc)


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 over the canonical JSON form of the effective configuration."""
    canonical = json.dumps(dataclasses.asdict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()
