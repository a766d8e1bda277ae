"""Runs seeded trials on the dumbbell topology and aggregates metrics.

Trials are independent; `jobs > 1` fans them out over a process pool and
merges by seed, so results are identical regardless of worker count.
"""

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .backend import kernel
from .scenarios import Scenario

MS = 1_000_000


@dataclass(frozen=True)
class FlowMetrics:
    throughput_mbps: float
    share: float
    mean_rtt_ms: float
    mean_qdelay_ms: float
    p99_qdelay_ms: float
    marks: int
    drops: int
    sent_pkts: int
    delivered_pkts: int
    lost_pkts: int
    residual_pkts: int


@dataclass(frozen=True)
class TrialResult:
    seed: int
    flows: tuple
    events: int


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    seeds: tuple
    trials: tuple  # one TrialResult per seed
    mean: tuple  # per-flow FlowMetrics of means
    std: tuple  # per-flow FlowMetrics of sample standard deviations


def jain_index(throughputs):
    """Jain's fairness index (sum x)^2 / (n * sum x^2)."""
    xs = list(throughputs)
    if not xs or any(x < 0 for x in xs):
        raise ValueError("throughputs must be non-negative")
    total = sum(xs)
    if total == 0:
        raise ValueError("all-zero throughputs have no fairness index")
    return total * total / (len(xs) * sum(x * x for x in xs))


def _to_flow_metrics(raw_flows):
    total_bps = sum(f["throughput_bps"] for f in raw_flows)
    out = []
    for f in raw_flows:
        share = f["throughput_bps"] / total_bps if total_bps > 0 else 0.0
        out.append(
            FlowMetrics(
                throughput_mbps=f["throughput_bps"] / 1e6,
                share=share,
                mean_rtt_ms=f["mean_rtt_ns"] / MS,
                mean_qdelay_ms=f["mean_qdelay_ns"] / MS,
                p99_qdelay_ms=f["p99_qdelay_ns"] / MS,
                marks=f["marks"],
                drops=f["dropped_pkts"],
                sent_pkts=f["sent_pkts"],
                delivered_pkts=f["delivered_pkts"],
                lost_pkts=f["lost_pkts"],
                residual_pkts=f["residual_pkts"],
            )
        )
    return tuple(out)


def run_trial(scenario: Scenario, seed: int, ts_period_s=0.0):
    """One deterministic trial; returns (TrialResult, timeseries rows)."""
    raw = kernel.sim.run_trial(scenario.kernel_cfg(ts_period_s=ts_period_s), seed)
    return (
        TrialResult(seed=seed, flows=_to_flow_metrics(raw["flows"]), events=raw["events"]),
        raw["ts"],
    )


def _trial_job(args):
    cfg, seed = args
    return seed, kernel.sim.run_trial(cfg, seed)


def default_seeds(trials, seed_base=1):
    return tuple(range(seed_base, seed_base + trials))


def _agg(trials, attr, fn):
    return tuple(
        fn([getattr(t.flows[i], attr) for t in trials])
        for i in range(len(trials[0].flows))
    )


def aggregate(scenario, trials):
    """Arithmetic mean and sample std per metric across trials."""
    trials = tuple(sorted(trials, key=lambda t: t.seed))
    n_flows = len(trials[0].flows)
    fields = FlowMetrics.__dataclass_fields__
    mean_rows, std_rows = [], []
    for i in range(n_flows):
        means, stds = {}, {}
        for name in fields:
            vals = [getattr(t.flows[i], name) for t in trials]
            means[name] = statistics.fmean(vals)
            stds[name] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        mean_rows.append(FlowMetrics(**means))
        std_rows.append(FlowMetrics(**stds))
    return ScenarioResult(
        scenario=scenario,
        seeds=tuple(t.seed for t in trials),
        trials=trials,
        mean=tuple(mean_rows),
        std=tuple(std_rows),
    )


def run_scenario(scenario: Scenario, seeds=None, jobs=1):
    scenario.validate()
    if seeds is None:
        seeds = default_seeds(scenario.trials)
    cfg = scenario.kernel_cfg()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raws = dict(pool.map(_trial_job, [(cfg, s) for s in seeds]))
    else:
        raws = {s: kernel.sim.run_trial(cfg, s) for s in seeds}
    trials = [
        TrialResult(seed=s, flows=_to_flow_metrics(raws[s]["flows"]), events=raws[s]["events"])
        for s in sorted(raws)
    ]
    return aggregate(scenario, trials)
