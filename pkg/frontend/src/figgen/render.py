"""Figure construction: heatmaps, share bars, and time-series panels.

Data shaping is split from drawing so the annotated values can be checked
against the CSV aggregates without parsing image output.  All figures use
a fixed style and deterministic SVG settings: rerunning on identical
inputs yields byte-identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

QUEUE_ORDER = ("fifo", "fifo-ecn", "codel", "fq", "fq-codel", "dualpi2")

# Fixed ids and real-text glyphs keep SVG output stable across runs.
DETERMINISTIC_RC = {
    "svg.hashsalt": "figgen",
    "svg.fonttype": "none",
    "figure.dpi": 100,
    "savefig.dpi": 100,
}

CELL_FMT = "{:.1f}"
MISSING = "--"


def _opponent_label(row):
    label = row["flow_b_cc"]
    if row["flow_b_ecn"] == "classic":
        label += "-ecn"
    elif row["flow_b_ecn"] == "accecn-l4s":
        label += "-accecn"
    return label


def _row_label(row):
    fb = "+fb" if row["flow_a_fallback"] else ""
    return f"{row['queue']}{fb} vs {_opponent_label(row)}"


def _sorted_rows(rows, seed):
    picked = [r for r in rows if r["seed"] == seed]
    queue_rank = {q: i for i, q in enumerate(QUEUE_ORDER)}
    picked.sort(
        key=lambda r: (
            queue_rank.get(r["queue"], len(QUEUE_ORDER)),
            r["flow_a_fallback"],
            _opponent_label(r),
            r["buffer_bdp"],
        )
    )
    return picked


def heatmap_data(rows, value_col):
    """(row_labels, buffers, matrix): buffers ascending left-to-right,
    one row per queue/fallback/opponent combination, NaN where a cell is
    absent from the input."""
    means = _sorted_rows(rows, "mean")
    if not means:
        raise ValueError("no aggregate (mean) rows in input")
    buffers = sorted({r["buffer_bdp"] for r in means})
    labels = []
    for r in means:
        label = _row_label(r)
        if label not in labels:
            labels.append(label)
    matrix = np.full((len(labels), len(buffers)), np.nan)
    for r in means:
        i = labels.index(_row_label(r))
        j = buffers.index(r["buffer_bdp"])
        matrix[i, j] = r[value_col]
    return labels, buffers, matrix


def render_heatmap(rows, value_col, title, out_path):
    labels, buffers, matrix = heatmap_data(rows, value_col)
    with plt.rc_context(DETERMINISTIC_RC):
        fig, ax = plt.subplots(
            figsize=(1.6 + 1.1 * len(buffers), 1.2 + 0.45 * len(labels))
        )
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_bad("lightgrey")  # missing cells are visually distinct
        masked = np.ma.masked_invalid(matrix)
        im = ax.imshow(masked, cmap=cmap, aspect="auto")
        ax.set_xticks(range(len(buffers)), [f"{b:g}" for b in buffers])
        ax.set_yticks(range(len(labels)), labels)
        ax.set_xlabel("buffer size (BDP multiples)")
        ax.set_title(title)
        vmin, vmax = (
            (np.nanmin(matrix), np.nanmax(matrix))
            if np.isfinite(matrix).any()
            else (0.0, 1.0)
        )
        mid = (vmin + vmax) / 2.0
        for i in range(len(labels)):
            for j in range(len(buffers)):
                v = matrix[i, j]
                if np.isnan(v):
                    ax.text(j, i, MISSING, ha="center", va="center",
                            color="dimgrey")
                else:
                    color = "white" if v < mid else "black"
                    ax.text(j, i, CELL_FMT.format(v), ha="center",
                            va="center", color=color, fontsize=8)
        fig.colorbar(im, ax=ax, shrink=0.85)
        fig.tight_layout()
        _save(fig, out_path)


def share_data(rows):
    """(labels, buffers, mean shares, std shares) for the share bar chart."""
    means = _sorted_rows(rows, "mean")
    if not means:
        raise ValueError("no aggregate (mean) rows in input")
    stds = {r["scenario_id"]: r for r in rows if r["seed"] == "std"}
    labels, buffers, share_mean, share_std = [], [], [], []
    for r in means:
        labels.append(_row_label(r))
        buffers.append(r["buffer_bdp"])
        share_mean.append(r["share_a"])
        std_row = stds.get(r["scenario_id"])
        share_std.append(std_row["share_a"] if std_row else 0.0)
    return labels, buffers, share_mean, share_std


def render_share_bars(rows, out_path):
    labels, buffers, mean, std = share_data(rows)
    names = [f"{lbl} @{b:g}" for lbl, b in zip(labels, buffers)]
    with plt.rc_context(DETERMINISTIC_RC):
        fig, ax = plt.subplots(figsize=(2.5 + 0.45 * len(names), 4.0))
        x = np.arange(len(names))
        ax.bar(x, mean, yerr=std, capsize=3, color="tab:blue")
        ax.axhline(0.5, color="grey", linestyle="--", linewidth=1)
        ax.set_xticks(x, names, rotation=60, ha="right", fontsize=7)
        ax.set_ylim(0.0, 1.0)
        ax.set_ylabel("throughput share (flow A)")
        ax.set_title("Link share when sharing the bottleneck")
        fig.tight_layout()
        _save(fig, out_path)


def timeseries_data(rows):
    """Per-flow (t, throughput, qdelay) series sorted by time."""
    flows = sorted({r["flow"] for r in rows})
    series = {}
    for fid in flows:
        pts = sorted((r for r in rows if r["flow"] == fid), key=lambda r: r["t_s"])
        series[fid] = (
            [p["t_s"] for p in pts],
            [p["throughput_mbps"] for p in pts],
            [p["qdelay_ms"] for p in pts],
        )
    return series


def render_timeseries(rows, out_path):
    """Two stacked panels: throughput on top, queuing latency below."""
    series = timeseries_data(rows)
    with plt.rc_context(DETERMINISTIC_RC):
        fig, (ax_tput, ax_delay) = plt.subplots(
            2, 1, sharex=True, figsize=(8.0, 5.0)
        )
        for fid, (t, tput, qdelay) in series.items():
            ax_tput.plot(t, tput, label=f"flow {fid}")
            ax_delay.plot(t, qdelay, label=f"flow {fid}")
        ax_tput.set_ylabel("throughput (Mb/s)")
        ax_tput.set_title("Throughput")
        ax_tput.legend(loc="lower right", fontsize=8)
        ax_delay.set_ylabel("queuing delay (ms)")
        ax_delay.set_title("Latency")
        ax_delay.set_xlabel("time (s)")
        fig.tight_layout()
        _save(fig, out_path)


def _save(fig, out_path):
    out_path = str(out_path)
    kw = {}
    if out_path.endswith(".svg"):
        kw["metadata"] = {"Date": None}  # timestamps break rerun identity
    fig.savefig(out_path, **kw)
    plt.close(fig)
