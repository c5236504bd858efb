"""One-class outlier classification and confidence-weighted voting.

The default classifier keeps a sliding window of values known to be normal
and flags a value as an event when its standardized distance from the window
mean exceeds a boundary radius learned from the window itself. Anything with
``train``/``classify`` methods of the same shape can stand in for it.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, NamedTuple, Protocol

import numpy as np

from .errors import ConfigError
from .model import Message, Opinion, Verdict


class Label(str, enum.Enum):
    EVENT = "event"
    NORMAL = "normal"


class ClassifierVerdict(NamedTuple):
    label: Label
    confidence: float

    @property
    def is_event(self) -> bool:
        return self.label is Label.EVENT


COLD = ClassifierVerdict(Label.NORMAL, 0.0)


@dataclass(frozen=True)
class ClassifierParams:
    window_size: int = 100
    boundary_quantile: float = 0.95
    confidence_slope: float = 2.0
    min_training_points: int = 5

    def __post_init__(self):
        if self.window_size < 1 or self.min_training_points < 1:
            raise ConfigError("window_size and min_training_points must be positive")
        if self.window_size < self.min_training_points:
            raise ConfigError("window_size must be at least min_training_points")
        if not 0.5 < self.boundary_quantile < 1.0:
            raise ConfigError("boundary_quantile must lie in (0.5, 1)")
        if self.confidence_slope <= 0:
            raise ConfigError("confidence_slope must be positive")


class Classifier(Protocol):
    def train(self, value: float, label: Label) -> None: ...

    def classify(self, value: float) -> ClassifierVerdict: ...


class OneClassClassifier:
    """Quantile-boundary distance classifier over a window of normal values.

    The boundary radius ``r`` is the empirical ``2q - 1`` quantile of the
    window's own absolute z-scores, which for Gaussian data matches the
    one-sided normal quantile ``z_q`` used as the fallback on small windows.
    """

    def __init__(self, params: ClassifierParams = ClassifierParams()):
        self.params = params
        self.window: deque[float] = deque(maxlen=params.window_size)
        self._fallback = NormalDist().inv_cdf(params.boundary_quantile)
        self._fit = (0.0, 0.0, self._fallback)
        self._stale = False
        self._level = 2.0 * params.boundary_quantile - 1.0
        # below this many points the empirical tail holds fewer than ~2 samples
        self._min_empirical = math.ceil(2.0 / (1.0 - self._level))
        self._min_points = params.min_training_points
        self._slope = params.confidence_slope

    def __len__(self) -> int:
        return len(self.window)

    @property
    def ready(self) -> bool:
        return len(self.window) >= self.params.min_training_points

    def train(self, value: float, label: Label) -> None:
        if label is not Label.NORMAL:
            return
        self.window.append(float(value))
        # the boundary depends only on the window, so refit lazily on next use
        self._stale = True

    def _refit(self) -> tuple[float, float, float]:
        values = np.fromiter(self.window, float, len(self.window))
        n = values.size
        mean = float(values.sum()) / n
        dev = np.abs(values - mean)
        std = math.sqrt(float(np.dot(dev, dev)) / n)
        if n < self._min_empirical or std == 0.0:
            return mean, std, self._fallback
        # linear interpolation between order statistics of the scores
        pos = self._level * (n - 1)
        lo = int(pos)
        hi = min(lo + 1, n - 1)
        part = np.partition(dev, (lo, hi))
        return mean, std, float(part[lo] + (part[hi] - part[lo]) * (pos - lo)) / std

    @property
    def boundary(self) -> tuple[float, float, float]:
        """(mean, std, radius) of the current window."""
        if self._stale:
            self._fit = self._refit()
            self._stale = False
        return self._fit

    @property
    def mean(self) -> float:
        return self.boundary[0]

    @property
    def std(self) -> float:
        return self.boundary[1]

    @property
    def radius(self) -> float:
        return self.boundary[2]

    def score(self, value: float) -> float:
        mean, std, _ = self.boundary
        if std == 0.0:
            return 0.0 if value == mean else math.inf
        return abs(value - mean) / std

    def classify(self, value: float) -> ClassifierVerdict:
        if len(self.window) < self._min_points:
            return COLD
        mean, std, radius = self.boundary
        if std == 0.0:
            if value == mean:
                return ClassifierVerdict(Label.NORMAL, 1.0 - math.exp(-self._slope * radius))
            return ClassifierVerdict(Label.EVENT, 1.0)
        score = abs(value - mean) / std
        label = Label.EVENT if score > radius else Label.NORMAL
        return ClassifierVerdict(label, 1.0 - math.exp(-self._slope * abs(score - radius)))

    def snapshot(self) -> tuple:
        return (tuple(self.window), *self.boundary)


def aggregate_votes(own: ClassifierVerdict, opinions: Iterable[Opinion]) -> ClassifierVerdict:
    """Confidence-weighted majority vote of the agent and its neighbors.

    Unknown opinions carry no weight. Ties keep the agent's own label, and
    when no neighbor contributes any weight ``own`` is returned unchanged.
    """
    w_event = w_normal = 0.0
    for o in opinions:
        if o.verdict is Verdict.TRUE:
            w_event += o.confidence
        elif o.verdict is Verdict.FALSE:
            w_normal += o.confidence
    if w_event == 0.0 and w_normal == 0.0:
        return own
    if own.label is Label.EVENT:
        w_event += own.confidence
    else:
        w_normal += own.confidence
    total = w_event + w_normal
    if w_event > w_normal:
        label = Label.EVENT
    elif w_normal > w_event:
        label = Label.NORMAL
    else:
        label = own.label
    winning = w_event if label is Label.EVENT else w_normal
    return ClassifierVerdict(label, winning / total)


def form_opinion(classifier: Classifier, request: Message, unknown_threshold: float, event_type: int = 0) -> Opinion:
    """Answer a neighbor's opinion request with this agent's own classifier."""
    if request.x is None:
        return Opinion(Verdict.UNKNOWN, 0.0)
    if request.e_type is None or request.e_type != event_type:
        # without a matching event type the request cannot be routed to a classifier
        return Opinion(Verdict.UNKNOWN, 0.0)
    verdict = classifier.classify(request.x)
    if verdict.confidence < unknown_threshold:
        return Opinion(Verdict.UNKNOWN, verdict.confidence)
    return Opinion(Verdict.TRUE if verdict.is_event else Verdict.FALSE, verdict.confidence)
