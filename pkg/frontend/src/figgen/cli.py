"""Command-line front end: figgen <kind> --in <csv...> --out <img>.

Kinds: heatmap-throughput, heatmap-qdelay, share-bars, timeseries.
Output format follows the --out extension (SVG or PNG); SVG output is
byte-identical across reruns on identical inputs.  Exit codes: 0 success,
1 bad input (schema mismatch, empty data, unknown kind).
"""

import argparse
import sys

from . import io, render

KINDS = ("heatmap-throughput", "heatmap-qdelay", "share-bars", "timeseries")

EXIT_OK = 0
EXIT_ERROR = 1


def _render(kind, paths, out):
    if kind == "timeseries":
        render.render_timeseries(io.load_timeseries(paths), out)
        return
    rows = io.load_results(paths)
    if kind == "heatmap-throughput":
        render.render_heatmap(
            rows,
            "throughput_a_mbps",
            "Flow A throughput (Mb/s) on a shared 100 Mb/s bottleneck",
            out,
        )
    elif kind == "heatmap-qdelay":
        render.render_heatmap(
            rows, "qdelay_a_ms", "Flow A mean queuing delay (ms)", out
        )
    else:
        render.render_share_bars(rows, out)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="figgen", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True, help="input CSV files"
    )
    parser.add_argument("--out", required=True, help="output image (.svg/.png)")
    args = parser.parse_args(argv)

    try:
        _render(args.kind, args.inputs, args.out)
    except (io.SchemaError, ValueError, OSError) as exc:
        print(f"figgen error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
