"""Scenario configuration: YAML loading, validation and echo.

Every error raised while reading a file is a :class:`ConfigError` that
carries the 1-based line of the offending key when it is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from .capture import ReachabilityParams
from .lip import RobotParams
from .qpfb import FeedbackGains
from .sim import MECHANISM_SETS, GaitParams, SimScenario


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            loc = f"line {line}: "
        super().__init__(loc + message)
        self.message = message


@dataclass(frozen=True)
class SweepSpec:
    directions: int = 16
    phase: float = 0.25
    delta_v_min: float = 0.0
    delta_v_max: float = 3.0
    resolution: float = 0.01

    def __post_init__(self):
        if int(self.directions) != self.directions or self.directions < 1:
            raise ValueError("directions must be a positive integer")
        if not 0.0 <= self.phase <= 1.0:
            raise ValueError("phase must lie in [0, 1]")
        if not 0.0 <= self.delta_v_min < self.delta_v_max:
            raise ValueError("need 0 <= delta_v_min < delta_v_max")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")

    def direction_list(self) -> List[float]:
        return [2.0 * math.pi * k / self.directions for k in range(self.directions)]


@dataclass(frozen=True)
class RunSpec:
    direction_deg: float = 90.0
    delta_v: float = 0.5

    def __post_init__(self):
        if not math.isfinite(self.direction_deg):
            raise ValueError("direction_deg must be finite")
        if not self.delta_v >= 0:
            raise ValueError("delta_v must be nonnegative")


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "results"
    csv: str = "recoverable.csv"
    manifest: str = "manifest.json"
    plot: str = "recoverable.svg"
    log: str = "trajectory.jsonl"
    trajectory_plot: str = "trajectory.svg"


@dataclass(frozen=True)
class Scenario:
    sim: SimScenario = field(default_factory=SimScenario)
    mechanisms: Tuple[str, ...] = tuple(MECHANISM_SETS)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    run: RunSpec = field(default_factory=RunSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mechanisms", tuple(self.mechanisms))
        if not self.mechanisms:
            raise ValueError("at least one mechanism set is required")
        for m in self.mechanisms:
            if m not in MECHANISM_SETS:
                raise ValueError(f"unknown mechanism set {m!r}; choose from {', '.join(MECHANISM_SETS)}")

    def to_dict(self) -> Dict[str, Any]:
        g = self.sim.gains
        gains = {f.name: getattr(g, f.name) for f in fields(g)}
        gains["k_p"] = g.k_p.tolist()
        gains["kappa_min"] = g.kappa_min.tolist()
        gains["kappa_max"] = g.kappa_max.tolist()
        return {
            "robot": _plain(self.sim.robot),
            "gait": _plain(self.sim.gait),
            "reachability": _plain(self.sim.reach),
            "feedback": gains,
            "mechanisms": list(self.mechanisms),
            "sweep": _plain(self.sweep),
            "run": _plain(self.run),
            "output": _plain(self.output),
            "seed": self.seed,
        }


def _plain(obj) -> Dict[str, Any]:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


SECTIONS = {
    "robot": RobotParams,
    "gait": GaitParams,
    "reachability": ReachabilityParams,
    "feedback": FeedbackGains,
    "sweep": SweepSpec,
    "run": RunSpec,
    "output": OutputSpec,
}
TOP_LEVEL = set(SECTIONS) | {"mechanisms", "seed"}


def _line(node) -> Optional[int]:
    return None if node is None else node.start_mark.line + 1


def _mapping_lines(node) -> Dict[str, Tuple[int, Any]]:
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[str(k.value)] = (_line(k), v)
    return out


def _check_type(section: str, key: str, value, expected, line):
    name = f"{section}.{key}"
    if expected is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false, got {value!r}", line)
    elif expected in (int,):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}", line)
    elif expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}", line)
    elif expected is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}", line)


def _build_section(section: str, data, node) -> Any:
    cls = SECTIONS[section]
    lines = _mapping_lines(node)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be a mapping", _line(node))
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        line = lines.get(str(key), (None, None))[0]
        if key not in known:
            raise ConfigError(f"unknown key '{section}.{key}'; expected one of {', '.join(known)}", line)
        ftype = known[key].type
        if section == "feedback" and key in ("k_p", "kappa_min", "kappa_max"):
            if not _numeric_tree(value):
                raise ConfigError(f"{section}.{key} must be a number or a list of numbers", line)
            value = np.asarray(value, dtype=float)
        else:
            expected = {"float": float, "int": int, "str": str, "bool": bool}.get(str(ftype), float)
            _check_type(section, key, value, expected, line)
            if expected is float:
                value = float(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ValueError as exc:
        # name the first offending key mentioned in the message
        msg = str(exc)
        line = None
        for key in kwargs:
            if key in msg:
                line = lines.get(key, (None, None))[0]
                break
        if line is None:
            line = _line(node)
        raise ConfigError(f"invalid '{section}' settings: {msg}", line) from None


def _numeric_tree(v) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, (int, float)):
        return True
    if isinstance(v, list):
        return all(_numeric_tree(x) for x in v) and len(v) > 0
    return False


def scenario_from_dict(data: Dict[str, Any], node=None) -> Scenario:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at the top level", _line(node))
    lines = _mapping_lines(node)
    for key in data:
        if key not in TOP_LEVEL:
            raise ConfigError(f"unknown top-level key '{key}'; expected one of {', '.join(sorted(TOP_LEVEL))}", lines.get(str(key), (None,))[0])
    parts = {s: _build_section(s, data.get(s), lines.get(s, (None, None))[1]) for s in SECTIONS}
    mech = data.get("mechanisms", list(MECHANISM_SETS))
    mline = lines.get("mechanisms", (None,))[0]
    if isinstance(mech, str):
        mech = [mech]
    if not isinstance(mech, list) or not all(isinstance(m, str) for m in mech):
        raise ConfigError("mechanisms must be a list of mechanism set names", mline)
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}", lines.get("seed", (None,))[0])
    sim = SimScenario(parts["robot"], parts["gait"], parts["reachability"], parts["feedback"])
    try:
        return Scenario(sim, tuple(mech), parts["sweep"], parts["run"], parts["output"], seed)
    except ValueError as exc:
        raise ConfigError(str(exc), mline) from None


def parse_scenario(text: str, path: Optional[str] = None) -> Scenario:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", line, path) from None
    try:
        return scenario_from_dict(data, node)
    except ConfigError as exc:
        raise ConfigError(exc.message, exc.line, path) from None


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.  Raises ``OSError`` or :class:`ConfigError`."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    return parse_scenario(text, str(p))


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False)
