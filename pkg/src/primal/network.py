"""Who can talk to whom, and what each transmission costs.

Endpoints are sensors, agents and the single supervisor. The distance between
two endpoints is 0 when they are physically wired (a sensor and its agent in
the decentralized and distributed organizations) and 1 otherwise; only
distance-1 traffic is charged. Agents talk to their neighbors and the
supervisor directly, there is no forwarding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ProtocolError
from .model import CostVector, FieldMask, Message, Opinion

RESPONSE_COST = (1.0, 0.0)
CHANNELS = ("sensor", "neighbor", "supervisor")


class Endpoint(NamedTuple):
    kind: str
    id: int = 0

    def __str__(self):
        return self.kind if self.kind == "supervisor" else f"{self.kind}:{self.id}"


def sensor(i: int) -> Endpoint:
    return Endpoint("sensor", i)


def agent(i: int) -> Endpoint:
    return Endpoint("agent", i)


SUPERVISOR = Endpoint("supervisor", 0)


@dataclass
class Topology:
    sensor_owner: list[int]
    neighbors: list[list[int]]
    sensors_networked: bool = False

    def __post_init__(self):
        self._neighbor_sets = [frozenset(n) for n in self.neighbors]

    @property
    def num_agents(self) -> int:
        return len(self.neighbors)

    def owned_sensors(self, a: int) -> list[int]:
        return [s for s, owner in enumerate(self.sensor_owner) if owner == a]

    def is_neighbor(self, a: int, b: int) -> bool:
        return b in self._neighbor_sets[a]

    def distance(self, src: Endpoint, dst: Endpoint) -> int:
        if src.kind == "sensor" and dst.kind == "agent" and self.sensor_owner[src.id] == dst.id:
            return 1 if self.sensors_networked else 0
        return 1

    def channel(self, src: Endpoint, dst: Endpoint) -> str:
        """Name of the legal channel from ``src`` to ``dst``."""
        if src.kind == "sensor" and dst.kind == "agent":
            if 0 <= src.id < len(self.sensor_owner) and self.sensor_owner[src.id] == dst.id:
                return "sensor"
        elif src.kind == "agent" and 0 <= src.id < self.num_agents:
            if dst.kind == "supervisor":
                return "supervisor"
            if dst.kind == "agent" and self.is_neighbor(src.id, dst.id):
                return "neighbor"
        raise ProtocolError(f"no channel from {src} to {dst}")

    def dump(self) -> str:
        """One ``agent_id: n1,n2,...`` line per agent."""
        return "".join(f"{a}: {','.join(map(str, n))}\n" for a, n in enumerate(self.neighbors))


def neighborhood_size(fraction: float, num_agents: int) -> int:
    return int(math.floor(fraction * num_agents + 0.5))


def build_topology(config, rng: np.random.Generator) -> Topology:
    n = config.num_sensors
    if config.organization == "centralized":
        return Topology([0] * n, [[]], sensors_networked=True)
    if config.organization == "decentralized":
        return Topology(list(range(n)), [[] for _ in range(n)])
    k = neighborhood_size(config.neighborhood_fraction, n)
    if k >= n and k > 0:
        raise ConfigError(f"neighborhood of {k} agents needs more than {n} agents")
    neighbors = []
    for a in range(n):
        others = np.array([b for b in range(n) if b != a])
        picked = rng.choice(others, size=k, replace=False) if k else []
        neighbors.append([int(b) for b in picked])
    if getattr(config, "symmetric_neighbors", False):
        for a in range(n):
            for b in list(neighbors[a]):
                if a not in neighbors[b]:
                    neighbors[b].append(a)
    return Topology(list(range(n)), neighbors)


@dataclass(frozen=True)
class Receipt:
    channel: str
    src: Endpoint
    dst: Endpoint
    mask: FieldMask
    comm: float
    privacy: float

    @property
    def charged(self) -> tuple[float, float]:
        return (self.comm, self.privacy)


@dataclass
class ChannelTotals:
    msgs: int = 0
    comm: float = 0.0
    privacy: float = 0.0


def _channels():
    return {name: ChannelTotals() for name in CHANNELS}


@dataclass
class ChannelLedger:
    """Per-iteration and whole-run cost accumulators, one per channel.

    Opinion responses are counted apart from the channel message counts so
    that neighbor frequency reflects requests only.
    """

    keep_receipts: bool = False
    iteration: dict = field(default_factory=_channels)
    totals: dict = field(default_factory=_channels)
    responses: int = 0
    response_comm: float = 0.0
    response_privacy: float = 0.0
    total_responses: int = 0
    receipts: list = field(default_factory=list)

    def charge(self, channel: str, comm: float, privacy: float, count: int = 1) -> None:
        for acc in (self.iteration[channel], self.totals[channel]):
            acc.msgs += count
            acc.comm += comm * count
            acc.privacy += privacy * count

    def charge_response(self, comm: float, privacy: float, count: int = 1) -> None:
        self.responses += count
        self.total_responses += count
        self.response_comm += comm * count
        self.response_privacy += privacy * count

    def close_iteration(self) -> dict:
        """Return this iteration's accumulators as a flat dict and reset them."""
        row = {}
        for name, acc in self.iteration.items():
            row[f"{name}_msgs"] = acc.msgs
            row[f"{name}_comm"] = acc.comm
            row[f"{name}_privacy"] = acc.privacy
        row["opinion_responses"] = self.responses
        row["response_comm"] = self.response_comm
        self.iteration = _channels()
        self.responses = 0
        self.response_comm = 0.0
        self.response_privacy = 0.0
        return row


def transmit(m: Message, src: Endpoint, dst: Endpoint, topo: Topology, cv: CostVector, ledger: ChannelLedger) -> Receipt:
    """Deliver ``m`` and charge its cost to the matching channel.

    Delivery always succeeds; whether the receiver can use the message is the
    receiver's business.
    """
    channel = topo.channel(src, dst)
    if topo.distance(src, dst) == 0:
        comm = privacy = 0.0
    else:
        comm = cv.comm_table[m.present]
        privacy = cv.privacy_table[m.present]
        ledger.charge(channel, comm, privacy)
    receipt = Receipt(channel, src, dst, FieldMask(m.present), comm, privacy)
    if ledger.keep_receipts:
        ledger.receipts.append(receipt)
    return receipt


def opinion_response_cost(o: Opinion, ledger: ChannelLedger) -> tuple[float, float]:
    ledger.charge_response(*RESPONSE_COST)
    return RESPONSE_COST


class Network:
    """Topology plus the cost vectors in force on each channel."""

    def __init__(self, topo: Topology, costs: CostVector, neighbor_costs: CostVector = None, keep_receipts=False):
        self.topo = topo
        self.costs = costs
        self.neighbor_costs = neighbor_costs or costs
        self.ledger = ChannelLedger(keep_receipts=keep_receipts)

    def transmit(self, m: Message, src: Endpoint, dst: Endpoint) -> Receipt:
        cv = self.neighbor_costs if dst.kind == "agent" and src.kind == "agent" else self.costs
        return transmit(m, src, dst, self.topo, cv, self.ledger)

    def multicast(self, m: Message, src: Endpoint, dsts: list[Endpoint]) -> tuple[float, float]:
        """Send ``m`` to every agent in ``dsts``; returns the per-message charge.

        Charges exactly what one :meth:`transmit` per destination would.
        """
        topo, ledger = self.topo, self.ledger
        if src.kind != "agent" or not 0 <= src.id < topo.num_agents:
            raise ProtocolError(f"multicast from {src}")
        allowed = topo._neighbor_sets[src.id]
        for dst in dsts:
            if dst.kind != "agent" or dst.id not in allowed:
                raise ProtocolError(f"no channel from {src} to {dst}")
        cv = self.neighbor_costs
        comm, privacy = cv.comm_table[m.present], cv.privacy_table[m.present]
        if dsts:
            ledger.charge("neighbor", comm, privacy, len(dsts))
        if ledger.keep_receipts:
            mask = FieldMask(m.present)
            ledger.receipts.extend(Receipt("neighbor", src, dst, mask, comm, privacy) for dst in dsts)
        return comm, privacy

    def respond(self, o: Opinion) -> tuple[float, float]:
        return opinion_response_cost(o, self.ledger)

    def respond_all(self, count: int) -> None:
        self.ledger.charge_response(*RESPONSE_COST, count)
