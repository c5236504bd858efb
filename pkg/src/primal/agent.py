"""Agents: classify readings, ask neighbors, raise alarms.

Also holds the catalog of communication profiles, the (privacy preserving,
neighbor rule, supervisor rule) footprints of published detection schemes,
and the mapping from a profile onto a simulation configuration.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .classification import (
    ClassifierVerdict,
    Label,
    OneClassClassifier,
    aggregate_votes,
    form_opinion,
)
from .model import FieldMask, Measurement, Message, Opinion, Purpose
from .network import SUPERVISOR, Network, agent as agent_ep
from .transmitter import Channel, Transmitter, is_valid


def should_consult_neighbors(verdict: ClassifierVerdict, criterion: str, threshold: float) -> bool:
    if criterion == "all":
        return True
    if criterion == "outlier":
        return verdict.label is Label.EVENT
    if criterion == "confidence":
        return verdict.confidence < threshold
    if criterion == "none":
        return False
    raise ValueError(f"unknown neighbor criterion {criterion!r}")


def should_alarm(verdict: ClassifierVerdict, criterion: str) -> bool:
    if criterion == "all":
        return True
    if criterion == "outlier":
        return verdict.label is Label.EVENT
    raise ValueError(f"unknown supervisor criterion {criterion!r}")


@dataclass
class AgentReport:
    verdicts: dict = field(default_factory=dict)
    requests: int = 0
    alarms: int = 0
    rejected_alarms: int = 0
    comm: float = 0.0
    privacy: float = 0.0


class Agent:
    """One agent with its classifier and its two independent transmitters."""

    def __init__(
        self,
        id: int,
        sensors: list[int],
        neighbors: list[int],
        classifier: OneClassClassifier,
        neighbor_tx: Transmitter,
        supervisor_tx: Transmitter,
        criteria: tuple[str, str] = ("outlier", "outlier"),
        confidence_threshold: float = 0.6,
        unknown_threshold: float = 0.2,
        learning_enabled: bool = True,
        resend_rejected_alarms: bool = False,
        neighbor_rng: Optional[np.random.Generator] = None,
        supervisor_rng: Optional[np.random.Generator] = None,
        event_type: int = 0,
    ):
        self.id = id
        self.sensors = list(sensors)
        self.neighbors = list(neighbors)
        self.classifier = classifier
        self.neighbor_tx = neighbor_tx
        self.supervisor_tx = supervisor_tx
        self.neighbor_criterion, self.supervisor_criterion = criteria
        self.confidence_threshold = confidence_threshold
        self.unknown_threshold = unknown_threshold
        self.learning_enabled = learning_enabled
        self.resend_rejected_alarms = resend_rejected_alarms
        self.neighbor_rng = neighbor_rng or np.random.default_rng()
        self.supervisor_rng = supervisor_rng or np.random.default_rng()
        self.event_type = event_type
        self.endpoint = agent_ep(id)
        self._nb_eps = None

    def answer(self, request: Message) -> tuple[Opinion, bool]:
        """Opinion on a neighbor's request, and whether the request was usable."""
        usable = is_valid(request.present, Purpose.OPINION_REQUEST) and request.e_type == self.event_type
        return form_opinion(self.classifier, request, self.unknown_threshold, self.event_type), usable

    def _neighbor_eps(self, peers):
        if self._nb_eps is None:
            self._nb_eps = [peers[nb].endpoint for nb in self.neighbors]
        return self._nb_eps

    def consult(self, meas: Measurement, own: ClassifierVerdict, network: Network, peers) -> ClassifierVerdict:
        tx = self.neighbor_tx
        mask = tx.select_mask(self.learning_enabled, self.neighbor_rng)
        request = Message.from_measurement(meas, mask, Purpose.OPINION_REQUEST, self.id)
        charged = network.multicast(request, self.endpoint, self._neighbor_eps(peers))
        opinions = []
        usable = True
        for nb in self.neighbors:
            opinion, ok = peers[nb].answer(request)
            opinions.append(opinion)
            usable = usable and ok
        network.respond_all(len(opinions))
        if self.learning_enabled:
            # same mask to every neighbor: learn from the per-message price
            tx.learn(mask, charged, usable)
        return aggregate_votes(own, opinions)

    def alarm(self, meas: Measurement, network: Network, supervisor, report: AgentReport) -> None:
        tx = self.supervisor_tx
        mask = tx.select_mask(self.learning_enabled, self.supervisor_rng)
        msg = Message.from_measurement(meas, mask, Purpose.ALARM, self.id)
        receipt = network.transmit(msg, self.endpoint, SUPERVISOR)
        accepted = supervisor.log_alarm(msg, receipt)
        report.alarms += 1
        report.comm += receipt.comm
        report.privacy += receipt.privacy
        if self.learning_enabled:
            tx.learn(mask, receipt.charged, accepted)
        if not accepted:
            report.rejected_alarms += 1
            if self.resend_rejected_alarms:
                msg = Message.from_measurement(meas, tx.default_mask, Purpose.ALARM, self.id)
                receipt = network.transmit(msg, self.endpoint, SUPERVISOR)
                supervisor.log_alarm(msg, receipt)
                report.alarms += 1
                report.comm += receipt.comm
                report.privacy += receipt.privacy

    def step(self, measurements: list[Measurement], network: Network, peers, supervisor) -> AgentReport:
        report = AgentReport()
        for meas in measurements:
            verdict = self.classifier.classify(meas.value)
            if self.neighbors and should_consult_neighbors(verdict, self.neighbor_criterion, self.confidence_threshold):
                before = network.ledger.iteration["neighbor"]
                comm0, priv0 = before.comm, before.privacy
                verdict = self.consult(meas, verdict, network, peers)
                after = network.ledger.iteration["neighbor"]
                report.requests += len(self.neighbors)
                report.comm += after.comm - comm0
                report.privacy += after.privacy - priv0
            if should_alarm(verdict, self.supervisor_criterion):
                self.alarm(meas, network, supervisor, report)
            report.verdicts[meas.location] = verdict
        return report

    def train(self, value: float, label: Optional[Label]) -> None:
        if label is not None:
            self.classifier.train(value, label)


@dataclass(frozen=True)
class CommProfile:
    name: str
    privacy_preserving: bool
    neighbor_rule: str
    supervisor_rule: str
    exemplar: tuple[str, ...] = ()


_PROFILES = (
    CommProfile("PP-OO", True, "outlier", "outlier", ("ZMH09",)),
    CommProfile("PP-OA", True, "outlier", "always"),
    CommProfile("PP-AO", True, "always", "outlier", ("Ruan08",)),
    CommProfile("PP-AA", True, "always", "always"),
    CommProfile("NP-OO", False, "outlier", "outlier", ("Zhang12",)),
    CommProfile("NP-OA", False, "outlier", "always"),
    CommProfile("NP-AO", False, "always", "outlier", ("MarinPerianu07", "Wittenburg10")),
    CommProfile("NP-AA", False, "always", "always", ("Bahrepour10",)),
    CommProfile("NP-NO", False, "none", "outlier", ("Zoumboulakis07", "Faulkner11", "Faulkner13")),
    CommProfile("NP-NA", False, "none", "always", ("Bahrepour09",)),
)

_NEIGHBOR_RULE = {"outlier": "outlier", "always": "all", "none": "none"}
_SUPERVISOR_RULE = {"outlier": "outlier", "always": "all"}


def profile_catalog() -> list[CommProfile]:
    return list(_PROFILES)


def get_profile(name: str) -> CommProfile:
    for p in _PROFILES:
        if p.name == name:
            return p
    raise KeyError(name)


def apply_profile(p: CommProfile, base):
    """Configure ``base`` to communicate like profile ``p``; learning is left alone.

    Privacy-preserving schemes exchange privacy-neutral content between agents,
    so every field is free of privacy cost on the neighbor channel.
    """
    return replace(
        base,
        neighbor_criterion=_NEIGHBOR_RULE[p.neighbor_rule],
        supervisor_criterion=_SUPERVISOR_RULE[p.supervisor_rule],
        privacy_preserving_neighbors=p.privacy_preserving,
    )


def catalog_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "privacy_preserving", "communication_between_agents", "communication_to_supervisor", "example"])
    for p in _PROFILES:
        neighbor = "N/A" if p.neighbor_rule == "none" else p.neighbor_rule
        writer.writerow([p.name, p.privacy_preserving, neighbor, p.supervisor_rule, ";".join(p.exemplar)])
    return buf.getvalue()
