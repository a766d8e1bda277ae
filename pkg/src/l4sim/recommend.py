"""The "should you switch to Prague" recommendation table.

Aggregated shares are folded into the four bottleneck classes (single
queue without ECN, single queue with ECN, per-flow fair queuing, DualPI2),
split by opponent family and by the Prague fallback switch.  The verdict
is a no-starvation floor: OK iff min(share_prague, share_opponent) stays
at or above `fair_lo` in every covered cell of the class.
"""

from dataclasses import dataclass

BUFFER_TYPE_BY_QUEUE = {
    "fifo": "SQ w/o ECN",
    "fifo-ecn": "SQ + ECN",
    "codel": "SQ + ECN",
    "fq": "FQ + ECN",
    "fq-codel": "FQ + ECN",
    "dualpi2": "DualPI2",
}
BUFFER_TYPES = ("SQ w/o ECN", "SQ + ECN", "FQ + ECN", "DualPI2")
OPPONENT_FAMILY = {"cubic": "Cubic", "bbrv1": "BBRv2", "bbrv2": "BBRv2"}

OK = "OK"
NOT_OK = "NotOK"
NO_DATA = "insufficient data"


@dataclass(frozen=True)
class Verdict:
    buffer_type: str
    opponent: str  # "Cubic" | "BBRv2"
    fallback: bool
    verdict: str
    min_share: float | None
    violations: tuple  # (scenario_id, buffer_bdp, min_share) cells under floor


def recommend(rows, fair_lo=0.35):
    """Build the verdict table from aggregate ("mean") result rows."""
    cells = {}
    for row in rows:
        if row.seed != "mean":
            continue
        btype = BUFFER_TYPE_BY_QUEUE.get(row.queue)
        family = OPPONENT_FAMILY.get(row.flow_b_cc)
        if btype is None or family is None:
            continue
        key = (btype, family, row.flow_a_fallback)
        cells.setdefault(key, []).append(row)

    verdicts = []
    for btype in BUFFER_TYPES:
        for family in ("Cubic", "BBRv2"):
            for fallback in (False, True):
                got = cells.get((btype, family, fallback))
                if not got:
                    verdicts.append(
                        Verdict(btype, family, fallback, NO_DATA, None, ())
                    )
                    continue
                worst = min(min(r.share_a, 1.0 - r.share_a) for r in got)
                violations = tuple(
                    (r.scenario_id, r.buffer_bdp, min(r.share_a, 1.0 - r.share_a))
                    for r in got
                    if min(r.share_a, 1.0 - r.share_a) < fair_lo
                )
                verdicts.append(
                    Verdict(
                        btype,
                        family,
                        fallback,
                        OK if not violations else NOT_OK,
                        worst,
                        violations,
                    )
                )
    return verdicts


def render_table(verdicts, fair_lo=0.35):
    """Human-readable verdict table plus per-cell violations."""
    by_key = {(v.buffer_type, v.opponent, v.fallback): v for v in verdicts}

    def _cell(btype, family, fallback):
        v = by_key[(btype, family, fallback)]
        if v.verdict == NO_DATA:
            return "  ?  "
        return "  v  " if v.verdict == OK else "  X  "

    lines = [
        f"Is it okay to turn on TCP Prague?  (floor: min share >= {fair_lo:g})",
        "",
        f"{'Buffer Type':<14}| {'Fallback OFF':^13} | {'Fallback ON':^13}",
        f"{'':<14}| {'Cubic':^5} {'BBRv2':^6} | {'Cubic':^5} {'BBRv2':^6}",
        "-" * 46,
    ]
    for btype in BUFFER_TYPES:
        lines.append(
            f"{btype:<14}|"
            f"{_cell(btype, 'Cubic', False)}"
            f"{_cell(btype, 'BBRv2', False)}  |"
            f"{_cell(btype, 'Cubic', True)}"
            f"{_cell(btype, 'BBRv2', True)}"
        )
    lines.append("")
    lines.append("v = OK, X = not OK, ? = insufficient data")
    flagged = [v for v in verdicts if v.violations]
    if flagged:
        lines.append("")
        lines.append("Cells below the fairness floor:")
        for v in flagged:
            fb = "ON" if v.fallback else "OFF"
            for sid, buf, share in v.violations:
                lines.append(
                    f"  {v.buffer_type} vs {v.opponent} (fallback {fb}): "
                    f"{sid} @ {buf:g} BDP, min share {share:.3f}"
                )
    return "\n".join(lines)
