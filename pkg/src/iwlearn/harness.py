"""Experiment harness: schedule sweeps, active-learning sweeps and reports."""

from concurrent.futures import ProcessPoolExecutor
import csv
import dataclasses
from dataclasses import dataclass
import itertools
import json
import math
import os

from .active import ActiveConfig, run_active
from .learner import (DivergenceError, LearnerConfig, RegConfig, Schedule,
                      UpdateRule, evaluate, train_pass, update_example,
                      ModelState)
from .losses import LossKind

THREADS_ENV = "IWLEARN_THREADS"

DEFAULT_MUS = tuple(2.0 ** i for i in range(11))
DEFAULT_TAUS = tuple(10.0 ** i for i in range(9))
DEFAULT_POWERS = (0.5, 1.0)
DEFAULT_C0S = tuple(10.0 ** i for i in range(-8, 2))


@dataclass(frozen=True)
class SweepGrid:
    mus: tuple = DEFAULT_MUS
    taus: tuple = DEFAULT_TAUS
    powers: tuple = DEFAULT_POWERS
    rules: tuple = (UpdateRule.INVARIANT,)
    losses: tuple = (LossKind.parse("squared"),)

    def __post_init__(self):
        for name in ("mus", "taus", "powers", "rules", "losses"):
            if not getattr(self, name):
                raise ValueError(f"grid field {name!r} is empty")

    def schedules(self):
        return [Schedule(mu, tau, power) for mu, tau, power
                in itertools.product(self.mus, self.taus, self.powers)]

    def configs(self, reg=RegConfig()):
        """Learner configs in output order: loss, rule, mu, tau, power."""
        return [LearnerConfig(kind, UpdateRule(rule), sched, reg)
                for kind, rule, sched
                in itertools.product(self.losses, self.rules, self.schedules())]


@dataclass
class RunRecord:
    loss: str
    rule: str
    mu: float
    tau: float
    power: float
    lam: float = 0.0
    c0: float = math.nan
    seed: int = 0
    test_accuracy: float = math.nan
    test_loss: float = math.nan
    pv_loss: float = math.nan
    labels: int = 0
    fraction_queried: float = math.nan
    cap_events: int = 0
    diverged: bool = False

    @classmethod
    def for_config(cls, cfg, **extra):
        s = cfg.schedule
        return cls(cfg.kind.label, cfg.rule.value, s.mu, s.tau_s, s.power, cfg.reg.lam, **extra)

    @property
    def config_key(self):
        return (self.loss, self.rule, self.mu, self.tau, self.power, self.lam, self.c0)


FIELDS = [f.name for f in dataclasses.fields(RunRecord)]


def run_passive(train, test, cfg, boundary=None, checkpoints=None):
    """Train one pass and evaluate.

    With ``checkpoints`` (sorted example counts) one record is returned per
    checkpoint, each evaluated on the model after that many examples.
    """
    if not checkpoints:
        try:
            m, pv = train_pass(train, cfg)
        except DivergenceError:
            return RunRecord.for_config(cfg, labels=len(train), diverged=True)
        acc, loss = evaluate(m, test, cfg.kind, boundary)
        return RunRecord.for_config(cfg, test_accuracy=acc, test_loss=loss, pv_loss=pv,
                                    labels=len(train))
    records = []
    m = ModelState.zeros(cfg.dim)
    marks = iter(sorted(checkpoints))
    mark = next(marks, None)
    diverged = False
    for i, ex in enumerate(train, start=1):
        if mark is None:
            break
        if not diverged:
            try:
                update_example(m, ex, cfg)
            except DivergenceError:
                diverged = True
        while mark is not None and i >= mark:
            if diverged:
                records.append(RunRecord.for_config(cfg, labels=i, diverged=True))
            else:
                acc, loss = evaluate(m, test, cfg.kind, boundary)
                records.append(RunRecord.for_config(cfg, test_accuracy=acc, test_loss=loss,
                                                    pv_loss=m.pv_loss, labels=i))
            mark = next(marks, None)
    return records


def run_active_record(train, test, cfg, active_cfg):
    extra = dict(c0=active_cfg.c0, seed=active_cfg.seed)
    try:
        res = run_active(train, cfg, active_cfg)
    except DivergenceError:
        return RunRecord.for_config(cfg, diverged=True, **extra)
    acc, loss = evaluate(res.model, test, cfg.kind, active_cfg.boundary)
    return RunRecord.for_config(cfg, test_accuracy=acc, test_loss=loss,
                                pv_loss=res.model.pv_loss, labels=res.labels_queried,
                                fraction_queried=res.fraction_queried,
                                cap_events=res.cap_events, **extra)


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _passive_job(args):
    return run_passive(*args)


def _active_job(args):
    return run_active_record(*args)


def _map(fn, jobs):
    n = _threads()
    if n == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        # map keeps submission order, so output matches the sequential run
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * n))))


def run_sweep(train, test, grid, reg=RegConfig(), boundary=None):
    jobs = [(train, test, cfg, boundary) for cfg in grid.configs(reg)]
    return _map(_passive_job, jobs)


def run_active_sweep(train, test, grid, c0s, seed=0, boundary=0.0,
                     max_importance=1e6, reg=RegConfig()):
    jobs = [(train, test, cfg, ActiveConfig(c0, boundary, seed, max_importance))
            for cfg in grid.configs(reg) for c0 in c0s]
    return _map(_active_job, jobs)


# --- reports ---------------------------------------------------------------

def pareto_frontier(points):
    """Non-dominated ``(fraction, error)`` pairs, deduplicated, sorted by fraction.

    A point is dominated when another is no worse on both axes and strictly
    better on one.
    """
    best = []
    for frac, err in sorted(set((float(f), float(e)) for f, e in points)):
        if not best or err < best[-1][1]:
            best.append((frac, err))
    return best


def near_optimal_fraction(records, tol=0.001):
    """Share of runs within ``tol`` of the best accuracy; diverged runs count as misses.

    Returns NaN when every run diverged.
    """
    records = list(records)
    ok = [r.test_accuracy for r in records if not r.diverged]
    if not ok:
        return math.nan
    best = max(ok)
    return sum(a >= best - tol for a in ok) / len(records)


def label_complexity_ratio(passive_records, active_records, target_acc):
    """Passive labels over active labels needed to reach ``target_acc``; None if unreachable."""
    def min_labels(records):
        hits = [r.labels for r in records if not r.diverged and r.test_accuracy >= target_acc]
        return min(hits) if hits else None

    passive = min_labels(passive_records)
    active = min_labels(active_records)
    if passive is None or active is None or active == 0:
        return None
    return passive / active


def fraction_to_reach(frontier, error):
    """Smallest query fraction on ``frontier`` with test error <= ``error``, or inf."""
    hits = [f for f, e in frontier if e <= error]
    return min(hits) if hits else math.inf


def frontier_points(records):
    return [(r.fraction_queried, 1.0 - r.test_accuracy) for r in records if not r.diverged]


def group_by(records, *fields):
    groups = {}
    for r in records:
        groups.setdefault(tuple(getattr(r, f) for f in fields), []).append(r)
    return groups


# --- files -----------------------------------------------------------------

def write_records(path, records, config=None):
    """CSV with a header; ``config`` goes to a JSON sidecar next to it."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_records_to(fh, records)
    if config is not None:
        with open(sidecar_path(path), "w", encoding="utf-8") as fh:
            json.dump(config, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def write_records_to(fh, records):
    writer = csv.DictWriter(fh, fieldnames=FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow({k: _fmt(v) for k, v in dataclasses.asdict(r).items()})


def read_records(path):
    out = []
    types = {f.name: f.type for f in dataclasses.fields(RunRecord)}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kwargs = {}
            for k, v in row.items():
                t = types[k]
                if t in ("str", str):
                    kwargs[k] = v
                elif t in ("int", int):
                    kwargs[k] = int(v)
                elif t in ("bool", bool):
                    kwargs[k] = v == "1"
                else:
                    kwargs[k] = float(v)
            out.append(RunRecord(**kwargs))
    return out


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def sidecar_path(path):
    root, _ = os.path.splitext(path)
    return root + ".json"
