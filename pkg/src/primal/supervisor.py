"""Alarm logging, ground-truth feedback and detection accuracy."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classification import Label
from .model import FieldMask, GroundTruth, Message, Purpose
from .network import Receipt
from .transmitter import is_valid

FEEDBACK_MODES = ("full", "alarm_only", "none")


@dataclass(frozen=True)
class AlarmEntry:
    mask: FieldMask
    l: Optional[int]
    t: Optional[int]
    e_type: Optional[int]
    x: Optional[float]
    comm: float
    privacy: float
    accepted: bool


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __iadd__(self, other: "ConfusionCounts"):
        self.tp += other.tp
        self.fp += other.fp
        self.tn += other.tn
        self.fn += other.fn
        return self

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(c: ConfusionCounts) -> tuple[float, float, float]:
    """Precision, recall and F-measure; every 0/0 is taken as 0."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f = _ratio(2 * precision * recall, precision + recall)
    return precision, recall, f


class Supervisor:
    """Logs alarms against the ground truth and scores each finished iteration.

    Only the fields present in an alarm are ever read. An alarm is accepted
    when it carries a location, a timestep and an event type; repeated alarms
    for the same cell mark it once.
    """

    def __init__(self, gt: GroundTruth, feedback_mode: str = "full"):
        if feedback_mode not in FEEDBACK_MODES:
            raise ValueError(f"unknown feedback mode {feedback_mode!r}")
        self.gt = gt
        self.feedback_mode = feedback_mode
        self.log: list[AlarmEntry] = []
        self.triggered = np.zeros(gt.grid.shape, dtype=bool)
        self.counts = ConfusionCounts()

    def log_alarm(self, m: Message, receipt: Optional[Receipt] = None) -> bool:
        if m.purpose is not Purpose.ALARM:
            raise ValueError("only alarms can be logged")
        accepted = is_valid(m.present, Purpose.ALARM)
        if accepted and not (0 <= m.l < self.gt.num_locations and 0 <= m.t < self.gt.num_steps):
            accepted = False
        comm, privacy = receipt.charged if receipt is not None else (0.0, 0.0)
        self.log.append(AlarmEntry(FieldMask(m.present), m.l, m.t, m.e_type, m.x, comm, privacy, accepted))
        if accepted:
            self.triggered[m.l, m.t] = True
        return accepted

    def close_iteration(self, t: int) -> ConfusionCounts:
        events = self.gt.grid[:, t]
        fired = self.triggered[:, t]
        delta = ConfusionCounts(
            tp=int(np.sum(events & fired)),
            fp=int(np.sum(~events & fired)),
            tn=int(np.sum(~events & ~fired)),
            fn=int(np.sum(events & ~fired)),
        )
        self.counts += delta
        return delta

    def feedback(self, l: int, t: int) -> Optional[Label]:
        """Ground-truth label for cell (l, t), if the feedback mode releases it."""
        if self.feedback_mode == "none":
            return None
        if self.feedback_mode == "alarm_only" and not self.triggered[l, t]:
            return None
        return Label.EVENT if self.gt[l, t] else Label.NORMAL

    def log_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "l", "mask", "comm_cost", "privacy_cost", "accepted"])
        for e in self.log:
            writer.writerow(["" if e.t is None else e.t, "" if e.l is None else e.l, int(e.mask),
                             e.comm, e.privacy, int(e.accepted)])
        return buf.getvalue()


def feedback(l: int, t: int, mode: str, gt: GroundTruth, triggered=None) -> Optional[Label]:
    """Stateless form of :meth:`Supervisor.feedback`."""
    if mode == "none":
        return None
    if mode == "alarm_only" and (triggered is None or not triggered[l, t]):
        return None
    return Label.EVENT if gt[l, t] else Label.NORMAL
