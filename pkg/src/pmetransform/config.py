"""Run configurations for the command line, with presets and a JSON round trip.

A configuration is built in layers: dataclass defaults, then a named preset,
then a JSON file (``--config``), then flags given explicitly on the command
line. ``parse_config(render_config(cfg)) == cfg`` for every configuration.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration; ``flag`` names the offending option."""

    def __init__(self, flag: str, message: str) -> None:
        super().__init__(f"{flag}: {message}")
        self.flag = flag


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


@dataclass
class BarenblattConfig:
    m: float | None = None
    d: int = 1
    C: float = 1.0
    tau: float = 0.0
    t0: float = 1.0
    t1: float = 2.0
    nt: int = 101
    R: float = 6.0
    nx: int = 301

    def validate(self) -> None:
        if self.m is None:
            raise ConfigError("--m", "required")
        if not self.m > 1:
            raise ConfigError("--m", f"m must exceed 1, got {self.m}")
        if self.d < 1:
            raise ConfigError("--d", f"d must be a positive integer, got {self.d}")
        if not self.C > 0:
            raise ConfigError("--C", f"C must be positive, got {self.C}")
        if self.tau < 0:
            raise ConfigError("--tau", f"tau must be >= 0, got {self.tau}")
        if not self.t0 + self.tau > 0:
            raise ConfigError("--t0", "t0 + tau must be positive")
        if not self.t1 > self.t0:
            raise ConfigError("--t1", f"t1 must exceed t0 = {self.t0}")
        if self.nt < 3:
            raise ConfigError("--nt", f"need at least 3 time layers, got {self.nt}")
        if self.nx < 5:
            raise ConfigError("--nx", f"need at least 5 nodes, got {self.nx}")
        if not self.R > 0:
            raise ConfigError("--R", f"R must be positive, got {self.R}")


@dataclass
class TransformConfig:
    m: float | None = None
    alpha: float = 0.5
    M: float | None = None
    mode: str = "closed_form"
    phi: str = "a2"
    nodes_per_unit: int = 1024
    table: str = "0:1:0.125"

    def table_points(self) -> list[float]:
        try:
            lo, hi, step = (float(s) for s in self.table.split(":"))
        except ValueError:
            raise ConfigError("--table", f"expected LO:HI:STEP, got {self.table!r}") from None
        if not step > 0 or hi < lo:
            raise ConfigError("--table", "need STEP > 0 and HI >= LO")
        n = int(round((hi - lo) / step))
        pts = [lo + i * step for i in range(n + 1)]
        if abs(pts[-1] - hi) > 1e-9 * max(1.0, abs(hi)):
            pts.append(hi)
        return pts

    def resolved_M(self) -> float:
        if self.M is not None:
            return float(self.M)
        pts = self.table_points()
        return max(abs(pts[0]), abs(pts[-1]), 1.0)

    def validate(self) -> None:
        if self.m is None:
            raise ConfigError("--m", "required")
        if not self.m > 1:
            raise ConfigError("--m", f"m must exceed 1, got {self.m}")
        if not 0 < self.alpha < 1:
            raise ConfigError("--alpha", f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode not in ("closed_form", "quadrature"):
            raise ConfigError("--mode", f"unknown mode {self.mode!r}")
        if self.phi not in ("a2", "linear"):
            raise ConfigError("--phi", f"unknown phi {self.phi!r}")
        if self.nodes_per_unit < 16:
            raise ConfigError("--nodes-per-unit", "need at least 16")
        pts = self.table_points()
        if max(abs(pts[0]), abs(pts[-1])) > self.resolved_M():
            raise ConfigError("--M", "table extends beyond [-M, M]")

    def transform_dict(self) -> dict:
        cfg = {"kind": "power_law", "m": float(self.m), "alpha": float(self.alpha), "M": self.resolved_M(), "mode": self.mode}
        if self.mode == "quadrature":
            cfg.update(phi=self.phi, nodes_per_unit=self.nodes_per_unit)
        return cfg


@dataclass
class SolveConfig:
    m: float | None = None
    d: int = 1
    C: float = 1.0
    tau: float = 0.0
    t0: float = 1.0
    t1: float = 2.0
    R: float = 6.0
    nx: int = 401
    nt: int = 101
    scheme: str = "auto"

    def validate(self) -> None:
        BarenblattConfig(self.m, self.d, self.C, self.tau, self.t0, self.t1, self.nt, self.R, self.nx).validate()
        if self.scheme not in ("auto", "enthalpy", "nondivergence"):
            raise ConfigError("--scheme", f"unknown scheme {self.scheme!r}")


@dataclass
class VerifyConfig:
    m: float | None = None
    d: int = 1
    C: float = 1.0
    tau: float = 0.0
    alpha: float = 0.5
    M: float = 2.0
    t0: float = 1.0
    t1: float = 2.0
    R: float = 6.0
    nx0: int = 101
    levels: int = 3
    source: str = "analytic"

    def validate(self) -> None:
        BarenblattConfig(self.m, self.d, self.C, self.tau, self.t0, self.t1, 3, self.R, self.nx0).validate()
        if not 0 < self.alpha < 1:
            raise ConfigError("--alpha", f"alpha must lie in (0, 1), got {self.alpha}")
        if self.levels < 3:
            raise ConfigError("--levels", f"a convergence study needs at least 3 levels, got {self.levels}")
        if self.source not in ("analytic", "solver"):
            raise ConfigError("--source", f"unknown source {self.source!r}")
        if not self.M > 0:
            raise ConfigError("--M", "M must be positive")

    def nx_levels(self) -> list[int]:
        return [(self.nx0 - 1) * 2**i + 1 for i in range(self.levels)]


@dataclass
class PsiConfig:
    m: float | None = None
    d: int = 1
    C: float = 1.0
    tau: float = 0.0
    t0: float = 1.0
    t1: float = 2.0
    nt: int = 401
    R: float = 6.0
    nx: int = 201
    ks: list = field(default_factory=lambda: [0.5, 0.25, 0.125])
    alpha: float = 0.5
    alpha_u: float = 0.5

    def validate(self) -> None:
        BarenblattConfig(self.m, self.d, self.C, self.tau, self.t0, self.t1, self.nt, self.R, self.nx).validate()
        if not self.ks or any(not k > 0 for k in self.ks):
            raise ConfigError("--ks", "thresholds must be positive")
        if len(set(self.ks)) != len(self.ks):
            raise ConfigError("--ks", "thresholds must be distinct")
        if not 0 < self.alpha < 1:
            raise ConfigError("--alpha", f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.alpha_u <= 1:
            raise ConfigError("--alpha-u", f"alpha_u must lie in (0, 1], got {self.alpha_u}")


CONFIG_TYPES = {
    "barenblatt": BarenblattConfig,
    "transform": TransformConfig,
    "solve": SolveConfig,
    "verify": VerifyConfig,
    "psi": PsiConfig,
}

_SCENARIO_M2 = {"m": 2.0, "d": 1, "C": 1.0, "tau": 0.0, "t0": 1.0, "t1": 2.0, "R": 6.0}

PRESETS: dict[str, dict] = {
    "barenblatt-m2": dict(_SCENARIO_M2),
    "barenblatt-m2-alpha05": {**_SCENARIO_M2, "alpha": 0.5},
}


def field_names(command: str) -> list[str]:
    return [f.name for f in fields(CONFIG_TYPES[command])]


def from_dict(command: str, values: dict, base=None):
    """Overlay ``values`` on ``base`` (or the defaults); unknown keys are an error."""
    cls = CONFIG_TYPES[command]
    names = set(field_names(command))
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigError(_flag(unknown[0]), f"unknown option for {command!r}")
    cur = asdict(base) if base is not None else asdict(cls())
    cur.update(values)
    return cls(**cur)


def apply_preset(command: str, name: str):
    if name not in PRESETS:
        raise ConfigError("--preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    keep = set(field_names(command))
    return from_dict(command, {k: v for k, v in PRESETS[name].items() if k in keep})


def render_config(command: str, cfg) -> str:
    return json.dumps({"command": command, **asdict(cfg)}, indent=2, sort_keys=True)


def parse_config(text: str, command: str | None = None):
    """Inverse of :func:`render_config`; returns ``(command, config)``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("--config", "top level must be an object")
    cmd = data.pop("command", command)
    if command is not None and cmd != command:
        raise ConfigError("--config", f"file is for {cmd!r}, not {command!r}")
    if cmd not in CONFIG_TYPES:
        raise ConfigError("--config", f"unknown command {cmd!r}")
    return cmd, from_dict(cmd, data)


def load_config_file(path: str | Path, command: str, base):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    _, cfg = parse_config(text, command)
    explicit = {k: v for k, v in asdict(cfg).items() if k in json.loads(text)}
    return from_dict(command, explicit, base)
