"""Q-learning over message field masks.

Each transmitter owns a 64-entry table, one value per field mask, and is
updated with the single-state Q-learning rule (discount 0): the reward of a
transmission is its negative cost, minus a penalty when the receiver could not
use the message.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .model import NUM_MASKS, CostVector, FieldMask, Purpose, popcount

F = FieldMask

REQUIRED_FIELDS = {
    Purpose.OPINION_REQUEST: F.X | F.E_TYPE,
    Purpose.ALARM: F.L | F.T | F.E_TYPE,
}


class Channel(str, enum.Enum):
    NEIGHBOR = "neighbor"
    SUPERVISOR = "supervisor"

    @property
    def purpose(self) -> Purpose:
        return Purpose.OPINION_REQUEST if self is Channel.NEIGHBOR else Purpose.ALARM


# what an agent sends when learning is off: everything but its (unlinkable) id
PROTOCOL_MASK = {
    Channel.NEIGHBOR: F.L | F.X | F.T | F.E_TYPE | F.S_TYPE,
    Channel.SUPERVISOR: F.L | F.X | F.T | F.E_TYPE | F.S_TYPE,
}

# masks by ascending (cardinality, integer code); argmax over q[_ORDER] breaks ties this way
_ORDER = np.array(sorted(range(NUM_MASKS), key=lambda m: (popcount(m), m)))


_REQUIRED_INT = {purpose: int(fields) for purpose, fields in REQUIRED_FIELDS.items()}


def is_valid(mask: int, purpose: Purpose) -> bool:
    required = _REQUIRED_INT[purpose]
    return int(mask) & required == required


@dataclass(frozen=True)
class QLearnParams:
    alpha: float = 0.1
    epsilon_start: float = 0.3
    epsilon_min: float = 0.01
    epsilon_decay: float = 0.95
    privacy_weight: float = 1.0
    failure_penalty: float = 50.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if not 0.0 <= self.epsilon_min <= self.epsilon_start <= 1.0:
            raise ConfigError("need 0 <= epsilon_min <= epsilon_start <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ConfigError("epsilon_decay must lie in (0, 1]")
        if self.privacy_weight < 0:
            raise ConfigError("privacy_weight must be non-negative")
        if self.failure_penalty <= 0:
            raise ConfigError("failure_penalty must be positive")


def reward(charged: tuple[float, float], valid: bool, params: QLearnParams) -> float:
    comm, privacy = charged
    r = -(comm + params.privacy_weight * privacy)
    if not valid:
        r -= params.failure_penalty
    return r


class Transmitter:
    """Learns which fields to put in messages on one channel.

    With ``prices`` given, each entry starts at the mask's own negative price
    (what it would cost if the receiver accepted it), so exploration begins
    with cheap messages and validity is what has to be learned. Without it the
    table starts at zero.
    """

    def __init__(self, channel: Channel, params: QLearnParams = QLearnParams(), prices: Optional[CostVector] = None):
        self.channel = Channel(channel)
        self.params = params
        self.required_fields = REQUIRED_FIELDS[self.channel.purpose]
        self.epsilon = params.epsilon_start
        if prices is None:
            self.q = np.zeros(NUM_MASKS)
        else:
            comm = np.asarray(prices.comm_table)
            priv = np.asarray(prices.privacy_table)
            self.q = -(comm + params.privacy_weight * priv)

    @property
    def default_mask(self) -> FieldMask:
        return PROTOCOL_MASK[self.channel]

    def greedy(self) -> FieldMask:
        return FieldMask(int(_ORDER[np.argmax(self.q[_ORDER])]))

    def select_mask(self, learning_enabled: bool, rng: np.random.Generator) -> FieldMask:
        if not learning_enabled:
            return self.default_mask
        if self.epsilon > 0.0 and rng.random() < self.epsilon:
            return FieldMask(int(rng.integers(NUM_MASKS)))
        return self.greedy()

    def reward(self, mask: int, charged: tuple[float, float], valid: bool) -> float:
        return reward(charged, valid, self.params)

    def update(self, mask: int, r: float) -> None:
        a = self.params.alpha
        self.q[mask] = (1.0 - a) * self.q[mask] + a * r
        self.epsilon = max(self.params.epsilon_min, self.epsilon * self.params.epsilon_decay)

    def learn(self, mask: int, charged: tuple[float, float], valid: bool) -> float:
        r = self.reward(mask, charged, valid)
        self.update(mask, r)
        return r

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["mask", "q_value"])
        for mask in range(NUM_MASKS):
            writer.writerow([mask, repr(float(self.q[mask]))])
        return buf.getvalue()
