"""Simulation configuration and its flat ``key = value`` file format.

Nested parameter groups are flattened with dots::

    # two-arm calibration run
    num_sensors = 10
    organization = distributed
    event_model.p_event = 0.2
    event_model.event_dist = 5, 1
    cost_vector.privacy.l = 1
    qlearn_params.alpha = 0.1
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

from .classification import ClassifierParams
from .errors import ConfigError
from .model import FIELD_NAMES, CostVector, EventModel
from .supervisor import FEEDBACK_MODES
from .transmitter import QLearnParams

ORGANIZATIONS = ("centralized", "decentralized", "distributed")
NEIGHBOR_CRITERIA = ("all", "outlier", "confidence", "none")
SUPERVISOR_CRITERIA = ("all", "outlier")
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class SimConfig:
    num_sensors: int = 10
    neighborhood_fraction: float = 0.2
    organization: str = "distributed"
    event_model: EventModel = field(default_factory=EventModel)
    iterations: int = 200
    learning_enabled: bool = True
    neighbor_criterion: str = "outlier"
    supervisor_criterion: str = "outlier"
    privacy_preserving_neighbors: bool = False
    feedback_mode: str = "full"
    cost_vector: CostVector = field(default_factory=CostVector)
    classifier_params: ClassifierParams = field(default_factory=ClassifierParams)
    qlearn_params: QLearnParams = field(default_factory=QLearnParams)
    seed: int = 0
    confidence_threshold: float = 0.6
    unknown_threshold: float = 0.2
    symmetric_neighbors: bool = False
    resend_rejected_alarms: bool = False

    def validate(self) -> "SimConfig":
        if self.num_sensors < 1:
            raise ConfigError("num_sensors must be positive")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if not 0.0 <= self.neighborhood_fraction <= 1.0:
            raise ConfigError("neighborhood_fraction must lie in [0, 1]")
        if self.organization not in ORGANIZATIONS:
            raise ConfigError(f"organization must be one of {ORGANIZATIONS}")
        if self.neighbor_criterion not in NEIGHBOR_CRITERIA:
            raise ConfigError(f"neighbor_criterion must be one of {NEIGHBOR_CRITERIA}")
        if self.supervisor_criterion not in SUPERVISOR_CRITERIA:
            raise ConfigError(f"supervisor_criterion must be one of {SUPERVISOR_CRITERIA}")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ConfigError(f"feedback_mode must be one of {FEEDBACK_MODES}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 0.0 <= self.confidence_threshold <= 1.0 or not 0.0 <= self.unknown_threshold <= 1.0:
            raise ConfigError("thresholds must lie in [0, 1]")
        m = self.event_model
        if m.kind == "fixed_count" and m.total_events > self.num_sensors * self.iterations:
            raise ConfigError("total_events exceeds the number of grid cells")
        if self.organization == "distributed":
            k = int(self.neighborhood_fraction * self.num_sensors + 0.5)
            if k > 0 and k >= self.num_sensors:
                raise ConfigError("neighborhood must be smaller than the agent population")
        return self

    @property
    def num_agents(self) -> int:
        return 1 if self.organization == "centralized" else self.num_sensors

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict[str, str]:
        return flatten(self)

    def dumps(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())

    @classmethod
    def loads(cls, text: str) -> "SimConfig":
        pairs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            pairs[key] = value
        return from_dict(pairs)

    @classmethod
    def load(cls, path) -> "SimConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def flatten(cfg: SimConfig) -> dict[str, str]:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, CostVector):
            for table in ("comm", "privacy"):
                for name in FIELD_NAMES:
                    out[f"{f.name}.{table}.{name}"] = _fmt(float(getattr(value, table)[name]))
        elif dataclasses.is_dataclass(value):
            for sub in dataclasses.fields(value):
                out[f"{f.name}.{sub.name}"] = _fmt(getattr(value, sub.name))
        else:
            out[f.name] = _fmt(value)
    return out


def _parse(text: str, like):
    try:
        if isinstance(like, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, tuple):
            return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse {text!r}") from None
    return text


def from_dict(pairs: dict[str, str]) -> SimConfig:
    base = SimConfig()
    top, groups = {}, {}
    for key, text in pairs.items():
        head, _, rest = key.partition(".")
        if not hasattr(base, head):
            raise ConfigError(f"unknown key {key!r}")
        if rest:
            groups.setdefault(head, {})[rest] = text
        else:
            top[head] = _parse(text, getattr(base, head))
    for head, items in groups.items():
        current = getattr(base, head)
        if isinstance(current, CostVector):
            tables = {"comm": dict(current.comm), "privacy": dict(current.privacy)}
            for rest, text in items.items():
                table, _, name = rest.partition(".")
                if table not in tables or name not in FIELD_NAMES:
                    raise ConfigError(f"unknown key {head}.{rest!r}")
                tables[table][name] = _parse(text, 0.0)
            top[head] = CostVector(tables["comm"], tables["privacy"])
        elif dataclasses.is_dataclass(current):
            kwargs = {}
            for rest, text in items.items():
                if not hasattr(current, rest):
                    raise ConfigError(f"unknown key {head}.{rest}")
                kwargs[rest] = _parse(text, getattr(current, rest))
            try:
                top[head] = replace(current, **kwargs)
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc)) from None
        else:
            raise ConfigError(f"{head} takes no sub-keys")
    try:
        cfg = SimConfig(**top)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()
