"""Experiment-matrix configuration and grid execution.

A matrix config is a YAML file with a `grid` section (cross product of
queues x buffers x opponents x Prague variants) and/or a `single_runs`
list of one-flow scenarios (used for the utilization-vs-threshold panels).
`full_grid()` builds the full built-in grid.
"""

import pathlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import yaml

from .backend import kernel
from .harness import TrialResult, _to_flow_metrics, aggregate, default_seeds
from .results import rows_for_result, write_csv, write_timeseries
from .scenarios import (
    BUFFER_MULTIPLES,
    FlowSpec,
    QueueConfig,
    Scenario,
    ScenarioError,
)

GRID_OPPONENTS = (
    {"cc": "cubic", "ecn": "off"},
    {"cc": "cubic", "ecn": "classic"},
    {"cc": "bbrv1", "ecn": "off"},
    {"cc": "bbrv2", "ecn": "off"},
    {"cc": "bbrv2", "ecn": "classic"},
    {"cc": "bbrv2", "ecn": "accecn-l4s"},
)


@dataclass
class SingleRun:
    scenario: Scenario
    run_id: str


@dataclass
class MatrixConfig:
    queues: tuple = ()
    buffers: tuple = ()
    opponents: tuple = ()
    prague_variants: tuple = ({"fallback": False},)
    single_runs: tuple = ()
    trials: int = 10
    duration_s: float = 60.0
    bottleneck_mbps: float = 100.0
    base_rtt_ms: float = 10.0
    seed_base: int = 1
    timeseries: bool = False
    queue_params: dict = field(default_factory=dict)

    def expand(self):
        """Grid cells as Scenario objects (cross product)."""
        cells = []
        for qkind in self.queues:
            qcfg = QueueConfig(kind=qkind, **self.queue_params.get(qkind, {}))
            for buf in self.buffers:
                for opp in self.opponents:
                    for pvar in self.prague_variants:
                        cells.append(
                            Scenario(
                                queue=qcfg,
                                buffer_bdp=buf,
                                flow_a=FlowSpec(
                                    cc="prague",
                                    ecn="accecn-l4s",
                                    fallback=pvar.get("fallback", False),
                                    force_classify=pvar.get("force_classify"),
                                ),
                                flow_b=FlowSpec(
                                    cc=opp["cc"], ecn=_ecn_mode(opp.get("ecn"))
                                ),
                                bottleneck_mbps=self.bottleneck_mbps,
                                base_rtt_ms=self.base_rtt_ms,
                                duration_s=self.duration_s,
                                trials=self.trials,
                            )
                        )
        for cell in cells:
            cell.validate()
        return cells


def full_grid(trials=10):
    """The full built-in grid: 6 queues x 5 buffers x 6 opponents x
    fallback OFF/ON."""
    return MatrixConfig(
        queues=("fifo", "fifo-ecn", "codel", "fq", "fq-codel", "dualpi2"),
        buffers=BUFFER_MULTIPLES,
        opponents=GRID_OPPONENTS,
        prague_variants=({"fallback": False}, {"fallback": True}),
        trials=trials,
    )


def _ecn_mode(v):
    # YAML 1.1 reads a bare `off` as boolean false; map it back.
    return "off" if v is None or v is False else v


def _flow_spec_from(d):
    return FlowSpec(
        cc=d.get("cc", "cubic"),
        ecn=_ecn_mode(d.get("ecn")),
        fallback=d.get("fallback", False),
        force_classify=d.get("force_classify"),
    )


def load_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: malformed YAML: {exc}") from exc

    grid = raw.get("grid", {})
    single = []
    for i, run in enumerate(raw.get("single_runs", [])):
        qspec = dict(run.get("queue", {}))
        qkind = qspec.pop("kind", "fifo")
        flow = _flow_spec_from(run.get("flow", {"cc": "prague", "ecn": "accecn-l4s"}))
        scenario = Scenario(
            queue=QueueConfig(kind=qkind, **qspec),
            buffer_bdp=run.get("buffer_bdp", 1.0),
            flow_a=flow,
            flow_b=FlowSpec(cc="cubic"),  # placeholder, unused in single runs
            bottleneck_mbps=run.get("bottleneck_mbps", raw.get("bottleneck_mbps", 100.0)),
            base_rtt_ms=run.get("base_rtt_ms", raw.get("base_rtt_ms", 10.0)),
            duration_s=run.get("duration_s", raw.get("duration_s", 60.0)),
            trials=1,
        )
        single.append(SingleRun(scenario=scenario, run_id=run.get("id", f"run{i}")))

    try:
        cfg = MatrixConfig(
            queues=tuple(grid.get("queues", ())),
            buffers=tuple(grid.get("buffers", ())),
            opponents=tuple(grid.get("opponents", ())),
            prague_variants=tuple(
                grid.get("prague", [{"fallback": False}])
            ),
            single_runs=tuple(single),
            trials=int(raw.get("trials", 10)),
            duration_s=float(raw.get("duration_s", 60.0)),
            bottleneck_mbps=float(raw.get("bottleneck_mbps", 100.0)),
            base_rtt_ms=float(raw.get("base_rtt_ms", 10.0)),
            seed_base=int(raw.get("seed_base", 1)),
            timeseries=bool(raw.get("timeseries", False)),
            queue_params=raw.get("queue_params", {}),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    cfg.expand()  # validate eagerly so config errors surface before running
    return cfg


def _job(args):
    key, cfg, seed = args
    return key, seed, kernel.sim.run_trial(cfg, seed)


def run_matrix(cfg: MatrixConfig, out_dir, jobs=1, seed_base=None):
    """Execute every grid cell and single run; write results.csv (and
    timeseries files when enabled) into out_dir."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed_base = cfg.seed_base if seed_base is None else seed_base
    cells = cfg.expand()
    seeds = default_seeds(cfg.trials, seed_base)

    jobs_list = []
    for idx, scenario in enumerate(cells):
        ts = cfg.timeseries
        for j, seed in enumerate(seeds):
            kcfg = scenario.kernel_cfg(
                ts_period_s=0.1 if ts and j == 0 else 0.0
            )
            jobs_list.append(((idx, None), kcfg, seed))
    for run in cfg.single_runs:
        kcfg = run.scenario.kernel_cfg(single_flow=True, ts_period_s=0.1)
        jobs_list.append(((None, run.run_id), kcfg, seed_base))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw_results = list(pool.map(_job, jobs_list))
    else:
        raw_results = [_job(j) for j in jobs_list]

    by_cell = {}
    for key, seed, raw in raw_results:
        by_cell.setdefault(key, {})[seed] = raw

    all_rows = []
    for idx, scenario in enumerate(cells):
        raws = by_cell[(idx, None)]
        trials = [
            TrialResult(
                seed=s,
                flows=_to_flow_metrics(raws[s]["flows"]),
                events=raws[s]["events"],
            )
            for s in sorted(raws)
        ]
        result = aggregate(scenario, trials)
        all_rows.extend(rows_for_result(result))
        ts_rows = raws[min(raws)].get("ts") or ()
        if ts_rows:
            write_timeseries(out / f"ts_{scenario.scenario_id()}.csv", ts_rows)
    write_csv(out / "results.csv", all_rows)

    for run in cfg.single_runs:
        raw = by_cell[(None, run.run_id)][seed_base]
        write_timeseries(out / f"ts_{run.run_id}.csv", raw["ts"])

    return out / "results.csv"
