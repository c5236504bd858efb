"""Message protocol, cost vectors and signal generation.

A message is a subset of six independent fields. Which fields are present is
tracked by a :class:`FieldMask`, an integer bitset with a fixed bit order so
that Q-tables and logs stay portable::

    bit 0  a_ID     agent id
    bit 1  l        location (sensor id)
    bit 2  x        measured value
    bit 3  t        timestep
    bit 4  e_TYPE   event type
    bit 5  s_TYPE   sensor type
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .errors import ConfigError


class FieldMask(enum.IntFlag):
    A_ID = 1
    L = 2
    X = 4
    T = 8
    E_TYPE = 16
    S_TYPE = 32


FIELD_NAMES = ("a_ID", "l", "x", "t", "e_TYPE", "s_TYPE")
SINGLE_FIELDS = tuple(FieldMask(1 << i) for i in range(6))
NUM_MASKS = 64
EMPTY = FieldMask(0)
FULL = FieldMask(NUM_MASKS - 1)

_BY_NAME = dict(zip(FIELD_NAMES, SINGLE_FIELDS))


def mask_fields(mask: int) -> list[str]:
    """Field names present in ``mask``, in bit order."""
    return [name for i, name in enumerate(FIELD_NAMES) if mask >> i & 1]


def mask_from_fields(names) -> FieldMask:
    mask = 0
    for name in names:
        try:
            mask |= _BY_NAME[name]
        except KeyError:
            raise ValueError(f"unknown message field {name!r}") from None
    return FieldMask(mask)


def format_mask(mask: int) -> str:
    return "{" + ",".join(mask_fields(mask)) + "}"


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class Purpose(str, enum.Enum):
    OPINION_REQUEST = "opinion_request"
    ALARM = "alarm"
    REPORT = "report"  # sensor reading shipped to a remote agent


class Verdict(str, enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


class Opinion(NamedTuple):
    """A neighbor's answer to an opinion request."""

    verdict: Verdict
    confidence: float

    @property
    def weight(self) -> float:
        return 0.0 if self.verdict is Verdict.UNKNOWN else self.confidence


class Measurement(NamedTuple):
    location: int
    value: float
    timestep: int
    event_type: int = 0
    sensor_type: int = 0


@dataclass(frozen=True)
class Message:
    """A protocol message; a field holds a value iff its bit is in ``present``.

    ``present`` is kept as the plain integer encoding of the mask.
    """

    present: int
    purpose: Purpose
    a_id: Optional[int] = None
    l: Optional[int] = None
    x: Optional[float] = None
    t: Optional[int] = None
    e_type: Optional[int] = None
    s_type: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.present < NUM_MASKS:
            raise ValueError(f"mask {self.present} outside 0..63")
        values = (self.a_id, self.l, self.x, self.t, self.e_type, self.s_type)
        for i, value in enumerate(values):
            if (value is not None) != bool(self.present >> i & 1):
                raise ValueError(
                    f"field {FIELD_NAMES[i]} presence disagrees with mask {format_mask(self.present)}"
                )

    @classmethod
    def from_measurement(cls, meas: Measurement, mask: int, purpose: Purpose, agent_id: int) -> "Message":
        """Build a message carrying only the fields selected by ``mask``."""
        mask = int(mask)
        return cls(
            present=mask,
            purpose=purpose,
            a_id=agent_id if mask & 1 else None,
            l=meas.location if mask & 2 else None,
            x=meas.value if mask & 4 else None,
            t=meas.timestep if mask & 8 else None,
            e_type=meas.event_type if mask & 16 else None,
            s_type=meas.sensor_type if mask & 32 else None,
        )

    @property
    def mask(self) -> FieldMask:
        return FieldMask(self.present)


def _unit_comm():
    return {name: 1.0 for name in FIELD_NAMES}


def _location_privacy():
    return {name: (1.0 if name == "l" else 0.0) for name in FIELD_NAMES}


@dataclass(frozen=True)
class CostVector:
    """Per-field communication and privacy cost.

    The defaults charge one unit of communication per field and make the
    location the only privacy-sensitive field.
    """

    comm: Mapping[str, float] = field(default_factory=_unit_comm)
    privacy: Mapping[str, float] = field(default_factory=_location_privacy)

    def __post_init__(self):
        for table, name in ((self.comm, "comm"), (self.privacy, "privacy")):
            if set(table) != set(FIELD_NAMES):
                raise ConfigError(f"{name} cost must cover exactly the fields {FIELD_NAMES}")
        if any(v <= 0 for v in self.comm.values()):
            raise ConfigError("communication costs must be strictly positive")
        if any(v < 0 for v in self.privacy.values()):
            raise ConfigError("privacy costs must be non-negative")

    @cached_property
    def comm_table(self) -> tuple[float, ...]:
        return _mask_sums(self.comm)

    @cached_property
    def privacy_table(self) -> tuple[float, ...]:
        return _mask_sums(self.privacy)

    def without_privacy(self) -> "CostVector":
        return CostVector(dict(self.comm), {name: 0.0 for name in FIELD_NAMES})


def _mask_sums(costs: Mapping[str, float]) -> tuple[float, ...]:
    per_bit = [float(costs[name]) for name in FIELD_NAMES]
    out = []
    for mask in range(NUM_MASKS):
        total = 0.0
        for i in range(6):
            if mask >> i & 1:
                total += per_bit[i]
        out.append(total)
    return tuple(out)


def message_comm_cost(m: Message, cv: CostVector) -> float:
    return cv.comm_table[m.present]


def message_privacy_cost(m: Message, cv: CostVector) -> float:
    return cv.privacy_table[m.present]


@dataclass(frozen=True)
class EventModel:
    """How events are placed on the location x time grid and what they look like."""

    kind: str = "bernoulli"
    p_event: float = 0.5
    total_events: int = 300
    normal_dist: tuple[float, float] = (0.0, 1.0)
    event_dist: tuple[float, float] = (5.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("bernoulli", "fixed_count"):
            raise ConfigError(f"unknown event model kind {self.kind!r}")
        if self.kind == "bernoulli" and not 0.0 <= self.p_event <= 1.0:
            raise ConfigError("p_event must lie in [0, 1]")
        if self.kind == "fixed_count" and self.total_events < 1:
            raise ConfigError("total_events must be positive")
        for mean, sd in (self.normal_dist, self.event_dist):
            if sd < 0:
                raise ConfigError("standard deviations must be non-negative")


@dataclass(frozen=True)
class GroundTruth:
    """Boolean event grid indexed by (location, timestep); read-only."""

    grid: np.ndarray

    def __post_init__(self):
        self.grid.setflags(write=False)

    def __getitem__(self, cell: tuple[int, int]) -> bool:
        return bool(self.grid[cell])

    @property
    def num_locations(self) -> int:
        return self.grid.shape[0]

    @property
    def num_steps(self) -> int:
        return self.grid.shape[1]


def generate_ground_truth(config, rng: np.random.Generator) -> GroundTruth:
    """Draw the event grid for ``config.num_sensors`` x ``config.iterations`` cells."""
    model = config.event_model
    shape = (config.num_sensors, config.iterations)
    cells = shape[0] * shape[1]
    if model.kind == "bernoulli":
        grid = rng.random(shape) < model.p_event
    else:
        if model.total_events > cells:
            raise ConfigError(f"total_events={model.total_events} exceeds the {cells} grid cells")
        grid = np.zeros(cells, dtype=bool)
        grid[rng.choice(cells, size=model.total_events, replace=False)] = True
        grid = grid.reshape(shape)
    return GroundTruth(grid)


def sample_measurement(gt: GroundTruth, l: int, t: int, model: EventModel, rng: np.random.Generator) -> Measurement:
    mean, sd = model.event_dist if gt[l, t] else model.normal_dist
    return Measurement(location=l, value=float(rng.normal(mean, sd)), timestep=t)


def sample_values(gt: GroundTruth, model: EventModel, rng: np.random.Generator) -> np.ndarray:
    """Measured value for every cell of the grid at once."""
    z = rng.standard_normal(gt.grid.shape)
    (n_mean, n_sd), (e_mean, e_sd) = model.normal_dist, model.event_dist
    return np.where(gt.grid, e_mean + e_sd * z, n_mean + n_sd * z)
