"""Simulation loop, replications, sweeps and the packaged experiments.

Every random draw comes from a stream derived from ``(seed, entity)`` with
:class:`numpy.random.SeedSequence` spawn keys, so switching learning on or off
never shifts the event grid, the measurements or the topology of a run:

    (0,)    ground truth
    (1,)    measured values
    (2,)    neighbor lists
    (3, a)  agent a, neighbor transmitter
    (4, a)  agent a, supervisor transmitter
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from .agent import Agent, apply_profile, get_profile, profile_catalog, CommProfile
from .classification import OneClassClassifier
from .config import SimConfig
from .model import (
    FieldMask,
    Measurement,
    Message,
    Purpose,
    generate_ground_truth,
    sample_values,
)
from .network import Network, build_topology, sensor as sensor_ep
from .supervisor import Supervisor, metrics
from .transmitter import Channel, Transmitter

SENSOR_REPORT_MASK = FieldMask.L | FieldMask.X | FieldMask.T | FieldMask.E_TYPE | FieldMask.S_TYPE
Z_95 = 1.96

COLUMNS = (
    "iteration",
    "tp", "fp", "tn", "fn",
    "precision", "recall", "f_measure", "f_iteration",
    "neighbor_msgs", "supervisor_msgs", "sensor_msgs", "opinion_responses", "rejected_alarms",
    "neighbor_comm", "neighbor_privacy",
    "supervisor_comm", "supervisor_privacy",
    "sensor_comm", "sensor_privacy",
    "response_comm",
    "total_comm", "total_privacy",
    "cum_privacy", "cum_neighbor_privacy", "cum_supervisor_privacy",
)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass
class RunRecord:
    """Per-iteration rows of a single run plus the run's ledger totals."""

    rows: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)
    receipts: Optional[list] = None
    alarm_log: Optional[list] = None

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = COLUMNS.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    @property
    def final(self) -> dict:
        return dict(zip(COLUMNS, self.rows[-1])) if self.rows else {}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(self.rows)
        return buf.getvalue()


class Simulation:
    """One replication: ground truth, agents, network and supervisor."""

    def __init__(self, config: SimConfig, keep_receipts: bool = False):
        self.config = config.validate()
        cfg = self.config
        self.gt = generate_ground_truth(cfg, stream(cfg.seed, 0))
        self.values = sample_values(self.gt, cfg.event_model, stream(cfg.seed, 1))
        self.topology = build_topology(cfg, stream(cfg.seed, 2))
        costs = cfg.cost_vector
        neighbor_costs = costs.without_privacy() if cfg.privacy_preserving_neighbors else costs
        self.network = Network(self.topology, costs, neighbor_costs, keep_receipts=keep_receipts)
        self.supervisor = Supervisor(self.gt, cfg.feedback_mode)
        self.agents = []
        for a in range(self.topology.num_agents):
            self.agents.append(Agent(
                a,
                self.topology.owned_sensors(a),
                self.topology.neighbors[a],
                OneClassClassifier(cfg.classifier_params),
                Transmitter(Channel.NEIGHBOR, cfg.qlearn_params, neighbor_costs),
                Transmitter(Channel.SUPERVISOR, cfg.qlearn_params, costs),
                criteria=(cfg.neighbor_criterion, cfg.supervisor_criterion),
                confidence_threshold=cfg.confidence_threshold,
                unknown_threshold=cfg.unknown_threshold,
                learning_enabled=cfg.learning_enabled,
                resend_rejected_alarms=cfg.resend_rejected_alarms,
                neighbor_rng=stream(cfg.seed, 3, a),
                supervisor_rng=stream(cfg.seed, 4, a),
            ))

    def run(self) -> RunRecord:
        cfg = self.config
        record = RunRecord()
        net, sup, topo = self.network, self.supervisor, self.topology
        cum_priv = cum_nb_priv = cum_sup_priv = 0.0
        for t in range(cfg.iterations):
            column = self.values[:, t].tolist()
            batches = []
            for ag in self.agents:
                batch = [Measurement(l, column[l], t) for l in ag.sensors]
                if topo.sensors_networked:
                    for meas in batch:
                        report = Message.from_measurement(meas, SENSOR_REPORT_MASK, Purpose.REPORT, ag.id)
                        net.transmit(report, sensor_ep(meas.location), ag.endpoint)
                batches.append(batch)
            rejected = 0
            verdicts = []
            for ag, batch in zip(self.agents, batches):
                rep = ag.step(batch, net, self.agents, sup)
                rejected += rep.rejected_alarms
                verdicts.append(rep.verdicts)
            delta = sup.close_iteration(t)
            for ag, batch, seen in zip(self.agents, batches, verdicts):
                for meas in batch:
                    label = sup.feedback(meas.location, t)
                    if label is None and cfg.feedback_mode == "none":
                        label = seen[meas.location].label
                    ag.train(meas.value, label)
            ledger = net.ledger.close_iteration()
            precision, recall, f = metrics(sup.counts)
            f_iter = metrics(delta)[2]
            total_comm = ledger["sensor_comm"] + ledger["neighbor_comm"] + ledger["supervisor_comm"] + ledger["response_comm"]
            total_priv = ledger["sensor_privacy"] + ledger["neighbor_privacy"] + ledger["supervisor_privacy"]
            cum_priv += total_priv
            cum_nb_priv += ledger["neighbor_privacy"]
            cum_sup_priv += ledger["supervisor_privacy"]
            c = sup.counts
            record.rows.append((
                t + 1,
                c.tp, c.fp, c.tn, c.fn,
                precision, recall, f, f_iter,
                ledger["neighbor_msgs"], ledger["supervisor_msgs"], ledger["sensor_msgs"],
                ledger["opinion_responses"], rejected,
                ledger["neighbor_comm"], ledger["neighbor_privacy"],
                ledger["supervisor_comm"], ledger["supervisor_privacy"],
                ledger["sensor_comm"], ledger["sensor_privacy"],
                ledger["response_comm"],
                total_comm, total_priv,
                cum_priv, cum_nb_priv, cum_sup_priv,
            ))
        record.totals = {
            name: {"msgs": acc.msgs, "comm": acc.comm, "privacy": acc.privacy}
            for name, acc in net.ledger.totals.items()
        }
        record.totals["responses"] = net.ledger.total_responses
        if net.ledger.keep_receipts:
            record.receipts = list(net.ledger.receipts)
        record.alarm_log = sup.log
        return record


def run_simulation(config: SimConfig, keep_receipts: bool = False) -> RunRecord:
    return Simulation(config, keep_receipts=keep_receipts).run()


# ---------------------------------------------------------------- sweeps

AXES = ("num_sensors", "neighborhood_fraction", "organization", "learning_enabled",
        "event_model", "criteria", "profile")


def configure(base: SimConfig, cell: dict) -> SimConfig:
    """Apply one sweep cell's axis values to ``base``."""
    cfg = base
    if "profile" in cell:
        p = cell["profile"]
        cfg = apply_profile(p if isinstance(p, CommProfile) else get_profile(p), cfg)
    changes = {}
    for name, value in cell.items():
        if name == "profile":
            continue
        if name == "criteria":
            changes["neighbor_criterion"], changes["supervisor_criterion"] = value
        elif name in AXES:
            changes[name] = value
        else:
            raise ValueError(f"unknown sweep axis {name!r}")
    return replace(cfg, **changes).validate()


@dataclass
class SweepSpec:
    base: SimConfig
    axes: dict = field(default_factory=dict)
    replications: int = 50

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")

    def cells(self) -> list[dict]:
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.axes[n] for n in names))]

    def seeds(self) -> list[int]:
        return [self.base.seed + i for i in range(self.replications)]


def _cell_label(value: Any) -> str:
    if isinstance(value, tuple):
        return "(" + ",".join(str(v)[0] for v in value) + ")"
    if isinstance(value, CommProfile):
        return value.name
    if hasattr(value, "p_event"):
        return f"{value.kind}:{value.p_event if value.kind == 'bernoulli' else value.total_events}"
    return str(value)


def summarize(values: np.ndarray) -> tuple[float, float]:
    """Mean and 0.95 confidence half-width over replications (axis 0)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, Z_95 * values.std(axis=0, ddof=1) / math.sqrt(n)


@dataclass
class Cell:
    values: dict
    records: list

    def stack(self, column: str) -> np.ndarray:
        """Replications x iterations array of one column."""
        return np.vstack([r.column(column) for r in self.records]) if self.records else np.empty((0, 0))

    def finals(self, column: str) -> np.ndarray:
        return np.array([r.column(column)[-1] for r in self.records])

    def label(self) -> str:
        return " ".join(f"{k}={_cell_label(v)}" for k, v in self.values.items())


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: list

    def cell(self, **values) -> Cell:
        for c in self.cells:
            if all(c.values.get(k) == v for k, v in values.items()):
                return c
        raise KeyError(values)

    def _axis_header(self):
        return list(self.spec.axes)

    def sweep_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        metric_cols = COLUMNS[1:]
        header = self._axis_header() + ["iteration", "replications", "ci_degenerate"]
        for col in metric_cols:
            header += [f"{col}_mean", f"{col}_ci"]
        writer.writerow(header)
        for c in self.cells:
            if not c.records or not len(c.records[0]):
                continue
            stats = {col: summarize(c.stack(col)) for col in metric_cols}
            n = len(c.records)
            for i in range(len(c.records[0])):
                row = [_cell_label(c.values[a]) for a in self.spec.axes] + [i + 1, n, int(n < 2)]
                for col in metric_cols:
                    mean, ci = stats[col]
                    row += [float(mean[i]), float(ci[i])]
                writer.writerow(row)
        return buf.getvalue()

    def final_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        metric_cols = COLUMNS[1:]
        header = self._axis_header() + ["replications", "ci_degenerate"]
        for col in metric_cols:
            header += [f"{col}_mean", f"{col}_ci"]
        writer.writerow(header)
        for c in self.cells:
            if not c.records or not len(c.records[0]):
                continue
            n = len(c.records)
            row = [_cell_label(c.values[a]) for a in self.spec.axes] + [n, int(n < 2)]
            for col in metric_cols:
                mean, ci = summarize(c.finals(col))
                row += [float(mean), float(ci)]
            writer.writerow(row)
        return buf.getvalue()

    def write(self, out: Path) -> None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(self.sweep_csv(), encoding="utf-8", newline="\n")
        (out / "final.csv").write_text(self.final_csv(), encoding="utf-8", newline="\n")


def _cache_key(cfg: SimConfig) -> str:
    if cfg.organization != "distributed":
        cfg = replace(cfg, neighborhood_fraction=0.0)
    return cfg.dumps()


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every cell of ``spec`` for every replication seed.

    Cells that resolve to the same configuration (a centralized network does
    not care about neighborhood size) are simulated once and shared.
    """
    jobs, layout = [], []
    index = {}
    for values in spec.cells():
        cfg = configure(spec.base, values)
        slots = []
        for seed in spec.seeds():
            run_cfg = cfg.with_seed(seed)
            key = _cache_key(run_cfg)
            if key not in index:
                index[key] = len(jobs)
                jobs.append(run_cfg)
            slots.append(index[key])
        layout.append((values, slots))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_simulation, jobs, chunksize=4))
    else:
        records = [run_simulation(cfg) for cfg in jobs]
    cells = [Cell(values, [records[i] for i in slots]) for values, slots in layout]
    return SweepResult(spec, cells)


# ---------------------------------------------------------------- experiments

def _distributed(base: SimConfig) -> SimConfig:
    return replace(base, organization="distributed")


def experiment_calibration(base: SimConfig = SimConfig(), replications: int = 50, workers: int = 1) -> SweepResult:
    """Learning on vs off in a distributed network; both arms share seeds."""
    spec = SweepSpec(_distributed(base), {"learning_enabled": [True, False]}, replications)
    return run_sweep(spec, workers)


def experiment_parameters(base: SimConfig = SimConfig(), replications: int = 50, workers: int = 1,
                          sizes=(10, 50), fractions=(0.0, 0.2, 0.5)) -> SweepResult:
    spec = SweepSpec(
        replace(base, learning_enabled=True),
        {
            "num_sensors": list(sizes),
            "neighborhood_fraction": list(fractions),
            "organization": ["centralized", "distributed"],
        },
        replications,
    )
    return run_sweep(spec, workers)


CRITERIA_PAIRS = {
    "(a,o)": ("all", "outlier"),
    "(o,o)": ("outlier", "outlier"),
    "(c,o)": ("confidence", "outlier"),
    "No class": ("all", "all"),
}


def experiment_criteria(base: SimConfig = SimConfig(), replications: int = 50, workers: int = 1) -> SweepResult:
    """Transmission criteria compared with the learning layer off.

    With learning on, neighbor-channel privacy is set by exploration rather
    than by how often an agent asks, which hides the effect being measured.
    """
    base = replace(_distributed(base), learning_enabled=False)
    spec = SweepSpec(base, {"criteria": list(CRITERIA_PAIRS.values())}, replications)
    return run_sweep(spec, workers)


def experiment_profiles(base: SimConfig = SimConfig(), replications: int = 50, workers: int = 1) -> SweepResult:
    base = replace(_distributed(base), num_sensors=10, neighborhood_fraction=0.2)
    spec = SweepSpec(
        base,
        {"profile": [p.name for p in profile_catalog()], "learning_enabled": [True, False]},
        replications,
    )
    return run_sweep(spec, workers)


EXPERIMENTS = {
    "calibration": experiment_calibration,
    "parameters": experiment_parameters,
    "criteria": experiment_criteria,
    "profiles": experiment_profiles,
}
