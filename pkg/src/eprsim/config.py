"""Strict JSON run configuration for the ``eprsim`` command line tool.

A config file looks like::

    {
      "experiment": "chsh",
      "shots": 1000000,
      "seed": 7,
      "noise": "chsh_calibrated",
      "params": {"theta_L": 2.356194490192345},
      "output": {"dir": "results", "format": "both"}
    }

``noise`` is ``null`` (ideal), the name of a shipped calibration, or a full
or partial :class:`~eprsim.noise.NoiseConfig` mapping. Unknown keys anywhere
are rejected. ``params`` keys that are left out take the defaults below.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .measure import OPTIMAL_CHSH
from .noise import NoiseConfig, load_calibration

EXPERIMENTS = ("chsh", "wigner", "fringes", "epr", "ghz", "gates-verify", "compile", "lint")
FORMATS = ("json", "csv", "both")
# experiments whose physics depends on the noise block
NOISY = ("chsh", "fringes")
# experiments that never draw shots
DETERMINISTIC = ("gates-verify", "compile", "lint")

_FRINGE_GRID = [k * math.pi / 4 for k in range(9)]

PARAM_DEFAULTS: dict[str, dict[str, Any]] = {
    "chsh": {
        "theta_L": OPTIMAL_CHSH[0],
        "theta_Lp": OPTIMAL_CHSH[1],
        "theta_R": OPTIMAL_CHSH[2],
        "theta_Rp": OPTIMAL_CHSH[3],
        "elapsed": 0.0,
    },
    "wigner": {"a": 0.0, "b": 2 * math.pi / 3, "c": math.pi / 3},
    "fringes": {"phi_L": _FRINGE_GRID, "phi_R": _FRINGE_GRID},
    "epr": {
        "method": "rf_spin_flip",
        "timescale": 1e-4,
        "mean_momentum": 10.0,
        "momentum_spread": 0.02,
        "initial_size": 1e-3,
        "marginal_position_std": 300.0,
        "sigma_img": 1.0,
        "t_tof": None,  # null = far field
    },
    "ghz": {"settings": ["zzzz", "xxxx"], "condition": None},
    "gates-verify": {
        "thetas": None,  # null = 101 points on [-2 pi, 2 pi]
        "schemes": ["scheme1", "scheme2"],
        "site_count": 2,
        "targets": [0],
        "static_shift": 10e3,
        "aux_shift": 2.5e3,
        "tolerance": 1e-10,
    },
    "compile": {"source": None},
    "lint": {"source": None},
}

OUTPUT_DEFAULTS = {"dir": "results", "format": "both", "name": None}
TOP_KEYS = {"experiment", "shots", "seed", "noise", "params", "output"}


class ConfigError(ValueError):
    pass


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_params(experiment: str, params: dict) -> None:
    def number(key, positive=False, nonneg=False):
        v = params[key]
        if not _is_number(v):
            raise ConfigError(f"params.{key} must be a finite number, got {v!r}")
        if positive and v <= 0:
            raise ConfigError(f"params.{key} must be positive")
        if nonneg and v < 0:
            raise ConfigError(f"params.{key} must be >= 0")

    def number_list(key):
        v = params[key]
        if not (isinstance(v, list) and v and all(_is_number(x) for x in v)):
            raise ConfigError(f"params.{key} must be a non-empty list of finite numbers")

    if experiment == "chsh":
        for k in ("theta_L", "theta_Lp", "theta_R", "theta_Rp"):
            number(k)
        number("elapsed", nonneg=True)
    elif experiment == "wigner":
        for k in ("a", "b", "c"):
            number(k)
    elif experiment == "fringes":
        number_list("phi_L")
        number_list("phi_R")
    elif experiment == "epr":
        if not isinstance(params["method"], str):
            raise ConfigError("params.method must be a string")
        for k in ("timescale", "momentum_spread", "initial_size", "marginal_position_std"):
            number(k, positive=True)
        number("mean_momentum")
        number("sigma_img", nonneg=True)
        if params["t_tof"] is not None:
            number("t_tof", positive=True)
    elif experiment == "ghz":
        st = params["settings"]
        if not (isinstance(st, list) and st and all(isinstance(s, (str, list)) for s in st)):
            raise ConfigError("params.settings must be a non-empty list of basis strings or lists")
        cond = params["condition"]
        if cond is not None:
            if not (isinstance(cond, dict) and set(cond) == {"qubit", "basis", "outcome"}):
                raise ConfigError("params.condition must be null or {qubit, basis, outcome}")
            if not (_is_int(cond["qubit"]) and 0 <= cond["qubit"] < 4 and cond["outcome"] in (1, -1)):
                raise ConfigError("params.condition needs qubit in 0..3 and outcome +1 or -1")
    elif experiment == "gates-verify":
        if params["thetas"] is not None:
            number_list("thetas")
        known = {"scheme1", "scheme2", "scheme2_literal"}
        sch = params["schemes"]
        if not (isinstance(sch, list) and sch and set(sch) <= known):
            raise ConfigError(f"params.schemes must be a non-empty subset of {sorted(known)}")
        if not (_is_int(params["site_count"]) and params["site_count"] >= 2):
            raise ConfigError("params.site_count must be an integer >= 2")
        tg = params["targets"]
        if not (isinstance(tg, list) and tg and all(_is_int(t) and 0 <= t < params["site_count"] for t in tg)):
            raise ConfigError("params.targets must list sites below site_count")
        if len(set(tg)) >= params["site_count"]:
            raise ConfigError("params.targets must leave at least one non-target site")
        number("static_shift")
        number("aux_shift")
        number("tolerance", positive=True)
    elif experiment in ("compile", "lint"):
        if not isinstance(params["source"], str):
            raise ConfigError("params.source must name a .seq file")


@dataclass
class RunConfig:
    experiment: str
    shots: int = 0
    seed: int | None = None
    noise: NoiseConfig | None = None
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: dict(OUTPUT_DEFAULTS))
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        if not (_is_int(self.shots) and self.shots >= 0):
            raise ConfigError(f"shots must be a non-negative integer, got {self.shots!r}")
        if self.seed is not None and not (_is_int(self.seed) and self.seed >= 0):
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.shots > 0 and self.seed is None:
            raise ConfigError("seed is mandatory when shots > 0")
        if self.shots > 0 and self.experiment in DETERMINISTIC:
            raise ConfigError(f"{self.experiment} does not take shots")
        if self.noise is not None and self.experiment not in NOISY:
            raise ConfigError(f"{self.experiment} has no noise model; remove the noise block")

        unknown = set(self.params) - set(PARAM_DEFAULTS[self.experiment])
        if unknown:
            raise ConfigError(f"unknown params for {self.experiment}: {sorted(unknown)}")
        merged = copy.deepcopy(PARAM_DEFAULTS[self.experiment])
        merged.update(self.params)
        self.params = merged
        _check_params(self.experiment, self.params)

        unknown = set(self.output) - set(OUTPUT_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown output keys: {sorted(unknown)}")
        self.output = {**OUTPUT_DEFAULTS, **self.output}
        if self.output["format"] not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}")
        if not isinstance(self.output["dir"], str):
            raise ConfigError("output.dir must be a string")
        if self.output["name"] is not None and not isinstance(self.output["name"], str):
            raise ConfigError("output.name must be a string or null")

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | str = ".") -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment'")
        params = d.get("params", {})
        output = d.get("output", {})
        if not isinstance(params, dict) or not isinstance(output, dict):
            raise ConfigError("params and output must be JSON objects")
        return cls(
            experiment=d["experiment"],
            shots=d.get("shots", 0),
            seed=d.get("seed"),
            noise=resolve_noise(d.get("noise")),
            params=dict(params),
            output=dict(output),
            base_dir=Path(base_dir),
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        return cls.from_dict(data, base_dir=path.parent)

    @property
    def output_name(self) -> str:
        return self.output["name"] or self.experiment.replace("-", "_")

    def resolve_path(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    def to_dict(self) -> dict:
        """Fully resolved config. The output directory is left out so that
        artifacts do not depend on where they were written."""
        return {
            "experiment": self.experiment,
            "shots": self.shots,
            "seed": self.seed,
            "noise": None if self.noise is None else self.noise.to_dict(),
            "params": copy.deepcopy(self.params),
            "output": {"format": self.output["format"], "name": self.output_name},
        }


def resolve_noise(spec) -> NoiseConfig | None:
    if spec is None:
        return None
    if isinstance(spec, str):
        try:
            return load_calibration(spec)
        except FileNotFoundError:
            raise ConfigError(f"no shipped noise calibration named {spec!r}") from None
    if isinstance(spec, dict):
        try:
            return NoiseConfig.from_dict(spec)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"noise: {e}") from None
    raise ConfigError("noise must be null, a calibration name or an object")
