"""CSV ingestion for the experiment result schema.

The schema is the rendering contract with the simulator package; figures
are built purely from these files, never by importing the simulator.
"""

import csv

RESULT_COLUMNS = [
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

TS_COLUMNS = ["t_s", "flow", "throughput_mbps", "srtt_ms", "qdelay_ms", "cwnd_pkts"]

_FLOATS = (
    "buffer_bdp",
    "throughput_a_mbps",
    "throughput_b_mbps",
    "share_a",
    "qdelay_a_ms",
    "qdelay_b_ms",
    "rtt_a_ms",
    "rtt_b_ms",
    "marks",
    "drops",
)


class SchemaError(ValueError):
    """Input CSV does not match the expected schema."""


def _check_schema(path, fieldnames, expected):
    if fieldnames == expected:
        return
    got = list(fieldnames or [])
    missing = [c for c in expected if c not in got]
    extra = [c for c in got if c not in expected]
    offending = (missing + extra or ["<empty header>"])[0]
    raise SchemaError(
        f"{path}: unexpected CSV schema, offending column {offending!r}"
    )


def load_results(paths):
    """Parse result CSVs into row dicts; raises SchemaError on mismatch."""
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            _check_schema(path, reader.fieldnames, RESULT_COLUMNS)
            for rec in reader:
                row = dict(rec)
                for col in _FLOATS:
                    row[col] = float(rec[col])
                row["flow_a_fallback"] = rec["flow_a_fallback"] == "1"
                rows.append(row)
    if not rows:
        raise SchemaError(f"no data rows in {', '.join(str(p) for p in paths)}")
    return rows


def load_timeseries(paths):
    """Parse time-series CSVs into row dicts; raises SchemaError on mismatch."""
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            _check_schema(path, reader.fieldnames, TS_COLUMNS)
            for rec in reader:
                rows.append(
                    {
                        "t_s": float(rec["t_s"]),
                        "flow": int(rec["flow"]),
                        "throughput_mbps": float(rec["throughput_mbps"]),
                        "srtt_ms": float(rec["srtt_ms"]),
                        "qdelay_ms": float(rec["qdelay_ms"]),
                        "cwnd_pkts": float(rec["cwnd_pkts"]),
                    }
                )
    if not rows:
        raise SchemaError(f"no data rows in {', '.join(str(p) for p in paths)}")
    return rows
