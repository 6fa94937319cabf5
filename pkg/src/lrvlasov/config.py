"""Run configuration: TOML parsing, validation and defaults.

Defaults reproduce the reference two-stream setup (128 x 128 grid on
[0, 10 pi] x [-9, 9], tau = 0.025, rank 10, Strang splitting); the
correction mode and the solver kind must always be given explicitly.
Unknown keys are hard errors so typos cannot silently fall back to
defaults.
"""

import math
from dataclasses import dataclass

import tomli

from .conservation import CorrectionMode
from .state import Scenario


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


_FLOAT_KEYS = {
    "alpha_pert": 1e-3,
    "k": 0.2,
    "v0": 2.4,
    "x_min": 0.0,
    "x_max": 10.0 * math.pi,
    "v_min": -9.0,
    "v_max": 9.0,
    "tau": 0.025,
    "t_final": 100.0,
    "weight": 1.0,
}
_INT_KEYS = {
    "n_x": 128,
    "n_v": 128,
    "rank": 10,
    "n_sub": 2,
    "output_interval": 10,
}
_STR_KEYS = {
    "splitting": "strang",
    "mode": None,
    "solver": None,
}
_LIST_KEYS = {
    "snapshot_times": (),
}
KNOWN_KEYS = set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_STR_KEYS) | set(_LIST_KEYS)
REQUIRED_KEYS = ("mode", "solver")

SPLITTINGS = ("lie", "strang")
MODES = ("none", "local", "global", "combined")
SOLVERS = ("lowrank", "fullgrid")


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    n_x: int
    n_v: int
    rank: int
    tau: float
    t_final: float
    splitting: str
    mode: CorrectionMode
    n_sub: int
    output_interval: int
    solver: str
    snapshot_times: tuple = ()

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_final / self.tau - 1e-12))


def _coerce_float(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{key}' must be a number, got {value!r}")
    return float(value)


def _coerce_int(key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"key '{key}' must be an integer, got {value!r}")
    return value


def _flatten(doc: dict) -> dict:
    """Merge section contents into one flat key space; sections only group."""
    flat = {}

    def visit(d):
        for key, value in d.items():
            if isinstance(value, dict):
                visit(value)
            else:
                if key in flat:
                    raise ConfigError(f"key '{key}' given more than once")
                flat[key] = value

    visit(doc)
    return flat


def build_config(raw: dict) -> RunConfig:
    """Validate a flat key-value mapping and build the run configuration."""
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}'")
    for key in REQUIRED_KEYS:
        if key not in raw or raw[key] is None:
            raise ConfigError(f"required key '{key}' is missing")

    vals = {}
    for key, default in _FLOAT_KEYS.items():
        vals[key] = _coerce_float(key, raw[key]) if key in raw else default
    for key, default in _INT_KEYS.items():
        vals[key] = _coerce_int(key, raw[key]) if key in raw else default
    for key, default in _STR_KEYS.items():
        value = raw.get(key, default)
        if not isinstance(value, str):
            raise ConfigError(f"key '{key}' must be a string, got {value!r}")
        vals[key] = value
    snaps = raw.get("snapshot_times", list(_LIST_KEYS["snapshot_times"]))
    if not isinstance(snaps, (list, tuple)):
        raise ConfigError(f"key 'snapshot_times' must be a list of numbers, got {snaps!r}")
    vals["snapshot_times"] = tuple(_coerce_float("snapshot_times", t) for t in snaps)

    if vals["splitting"] not in SPLITTINGS:
        raise ConfigError(
            f"key 'splitting' must be one of {SPLITTINGS}, got {vals['splitting']!r}"
        )
    if vals["mode"] not in MODES:
        raise ConfigError(f"key 'mode' must be one of {MODES}, got {vals['mode']!r}")
    if vals["solver"] not in SOLVERS:
        raise ConfigError(f"key 'solver' must be one of {SOLVERS}, got {vals['solver']!r}")
    if vals["weight"] < 0:
        raise ConfigError(f"key 'weight' must be nonnegative, got {vals['weight']}")
    if vals["tau"] <= 0:
        raise ConfigError(f"key 'tau' must be positive, got {vals['tau']}")
    if vals["t_final"] < vals["tau"]:
        raise ConfigError(
            f"key 't_final' must be at least tau, got {vals['t_final']} < {vals['tau']}"
        )
    for key in ("n_x", "n_v", "n_sub", "output_interval"):
        if vals[key] < 1:
            raise ConfigError(f"key '{key}' must be at least 1, got {vals[key]}")
    corrected = vals["mode"] != "none"
    if vals["rank"] < 1 or (corrected and vals["rank"] < 2):
        raise ConfigError(
            f"key 'rank' violates r >= 1+d (= 2) required by the correction systems"
            f" (r >= 1 without corrections); got {vals['rank']}"
        )
    if vals["rank"] > min(vals["n_x"], vals["n_v"]):
        raise ConfigError(
            f"key 'rank' must not exceed min(n_x, n_v) = "
            f"{min(vals['n_x'], vals['n_v'])}, got {vals['rank']}"
        )

    try:
        scenario = Scenario(
            alpha_pert=vals["alpha_pert"],
            k=vals["k"],
            v0=vals["v0"],
            x_min=vals["x_min"],
            x_max=vals["x_max"],
            v_min=vals["v_min"],
            v_max=vals["v_max"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    mode = CorrectionMode(vals["mode"], vals["weight"] if vals["mode"] == "combined" else 1.0)
    return RunConfig(
        scenario=scenario,
        n_x=vals["n_x"],
        n_v=vals["n_v"],
        rank=vals["rank"],
        tau=vals["tau"],
        t_final=vals["t_final"],
        splitting=vals["splitting"],
        mode=mode,
        n_sub=vals["n_sub"],
        output_interval=vals["output_interval"],
        solver=vals["solver"],
        snapshot_times=vals["snapshot_times"],
    )


def parse_config(path, overrides=()) -> RunConfig:
    """Parse a TOML config file, apply 'key=value' overrides, validate."""
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    flat = _flatten(doc)
    for item in overrides:
        key, sep, text = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            parsed = tomli.loads(f"value = {text.strip()}")["value"]
        except tomli.TOMLDecodeError:
            parsed = text.strip()
        flat[key] = parsed
    return build_config(flat)
