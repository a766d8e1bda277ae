"""CSV result schema: one row per (scenario, seed) plus mean and std rows.

Floats are written with repr precision so parsing an emitted file
reproduces the in-memory aggregates exactly.
"""

import csv
from dataclasses import dataclass

COLUMNS = [
    "scenario_id",
    "queue",
    "buffer_bdp",
    "flow_a_cc",
    "flow_a_ecn",
    "flow_a_fallback",
    "flow_b_cc",
    "flow_b_ecn",
    "seed",
    "throughput_a_mbps",
    "throughput_b_mbps",
    "share_a",
    "qdelay_a_ms",
    "qdelay_b_ms",
    "rtt_a_ms",
    "rtt_b_ms",
    "marks",
    "drops",
]


@dataclass(frozen=True)
class ResultRow:
    scenario_id: str
    queue: str
    buffer_bdp: float
    flow_a_cc: str
    flow_a_ecn: str
    flow_a_fallback: bool
    flow_b_cc: str
    flow_b_ecn: str
    seed: str  # trial seed, or "mean" / "std"
    throughput_a_mbps: float
    throughput_b_mbps: float
    share_a: float
    qdelay_a_ms: float
    qdelay_b_ms: float
    rtt_a_ms: float
    rtt_b_ms: float
    marks: float
    drops: float


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_for_result(result):
    """Flatten a ScenarioResult into per-trial + mean + std rows."""
    s = result.scenario
    base = dict(
        scenario_id=s.scenario_id(),
        queue=s.queue.kind,
        buffer_bdp=float(s.buffer_bdp),
        flow_a_cc=s.flow_a.cc,
        flow_a_ecn=s.flow_a.ecn,
        flow_a_fallback=s.flow_a.fallback,
        flow_b_cc=s.flow_b.cc,
        flow_b_ecn=s.flow_b.ecn,
    )
    out = []

    def _row(tag, fa, fb):
        return ResultRow(
            seed=str(tag),
            throughput_a_mbps=fa.throughput_mbps,
            throughput_b_mbps=fb.throughput_mbps,
            share_a=fa.share,
            qdelay_a_ms=fa.mean_qdelay_ms,
            qdelay_b_ms=fb.mean_qdelay_ms,
            rtt_a_ms=fa.mean_rtt_ms,
            rtt_b_ms=fb.mean_rtt_ms,
            marks=float(fa.marks + fb.marks),
            drops=float(fa.drops + fb.drops),
            **base,
        )

    for trial in result.trials:
        out.append(_row(trial.seed, trial.flows[0], trial.flows[1]))
    out.append(_row("mean", result.mean[0], result.mean[1]))
    out.append(_row("std", result.std[0], result.std[1]))
    return out


def write_csv(path, rows, append=False):
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, col)) for col in COLUMNS])


def read_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise ValueError(
                f"{path}: unexpected CSV schema {reader.fieldnames}"
            )
        for rec in reader:
            rows.append(
                ResultRow(
                    scenario_id=rec["scenario_id"],
                    queue=rec["queue"],
                    buffer_bdp=float(rec["buffer_bdp"]),
                    flow_a_cc=rec["flow_a_cc"],
                    flow_a_ecn=rec["flow_a_ecn"],
                    flow_a_fallback=rec["flow_a_fallback"] == "1",
                    flow_b_cc=rec["flow_b_cc"],
                    flow_b_ecn=rec["flow_b_ecn"],
                    seed=rec["seed"],
                    throughput_a_mbps=float(rec["throughput_a_mbps"]),
                    throughput_b_mbps=float(rec["throughput_b_mbps"]),
                    share_a=float(rec["share_a"]),
                    qdelay_a_ms=float(rec["qdelay_a_ms"]),
                    qdelay_b_ms=float(rec["qdelay_b_ms"]),
                    rtt_a_ms=float(rec["rtt_a_ms"]),
                    rtt_b_ms=float(rec["rtt_b_ms"]),
                    marks=float(rec["marks"]),
                    drops=float(rec["drops"]),
                )
            )
    return rows


TS_COLUMNS = ["t_s", "flow", "throughput_mbps", "srtt_ms", "qdelay_ms", "cwnd_pkts"]


def write_timeseries(path, ts_rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TS_COLUMNS)
        for t, fid, tput, srtt, qd, cwnd in ts_rows:
            writer.writerow([repr(t), fid, repr(tput), repr(srtt), repr(qd), cwnd])
