"""figgen tests: data shaping against CSV aggregates, deterministic SVG
output, and the CLI contract."""

import csv

import pytest

from figgen import io, render
from figgen.cli import main

HEADER = io.RESULT_COLUMNS


def result_row(scenario_id, queue, buf, seed, tput_a, share_a, qd_a,
               opp="cubic", opp_ecn="off", fallback="0"):
    return [
        scenario_id, queue, repr(float(buf)), "prague", "accecn-l4s", fallback,
        opp, opp_ecn, seed, repr(tput_a), repr(100.0 - tput_a), repr(share_a),
        repr(qd_a), repr(qd_a + 0.5), repr(10.0 + qd_a), repr(10.5 + qd_a),
        "120.0", "4.0",
    ]


@pytest.fixture
def results_csv(tmp_path):
    """Two queues x two buffers, with one cell deliberately missing."""
    rows = []
    for queue, buf, tput, share, qd in (
        ("fifo", 1, 48.125, 0.48125, 6.25),
        ("fifo", 8, 45.5, 0.455, 40.125),
        ("dualpi2", 1, 39.25, 0.3925, 0.625),
        # dualpi2 @ 8 BDP intentionally absent
    ):
        sid = f"{queue}_{buf}bdp_prague_cubic"
        rows.append(result_row(sid, queue, buf, "1", tput + 1.0, share, qd))
        rows.append(result_row(sid, queue, buf, "2", tput - 1.0, share, qd))
        rows.append(result_row(sid, queue, buf, "mean", tput, share, qd))
        rows.append(result_row(sid, queue, buf, "std", 1.0, 0.01, 0.1))
    path = tmp_path / "results.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        w.writerows(rows)
    return path


@pytest.fixture
def ts_csv(tmp_path):
    path = tmp_path / "ts_fig1.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(io.TS_COLUMNS)
        for i in range(20):
            t = (i + 1) / 10.0
            w.writerow([repr(t), 0, repr(90.0 + i % 3), repr(26.0), repr(0.8), 30])
            w.writerow([repr(t), 1, repr(5.0 + i % 2), repr(27.0), repr(1.1), 12])
    return path


class TestIo:
    def test_load_results_parses_types(self, results_csv):
        rows = io.load_results([results_csv])
        assert len(rows) == 12
        mean = next(r for r in rows if r["seed"] == "mean")
        assert isinstance(mean["throughput_a_mbps"], float)
        assert mean["flow_a_fallback"] is False

    def test_schema_mismatch_names_offending_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        cols = [c for c in HEADER if c != "share_a"]
        path.write_text(",".join(cols) + "\n")
        with pytest.raises(io.SchemaError, match="share_a"):
            io.load_results([path])

    def test_empty_csv_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(HEADER) + "\n")
        with pytest.raises(io.SchemaError, match="no data rows"):
            io.load_results([path])

    def test_timeseries_schema_checked(self, tmp_path):
        path = tmp_path / "ts.csv"
        path.write_text("t_s,flow\n0.1,0\n")
        with pytest.raises(io.SchemaError):
            io.load_timeseries([path])


class TestHeatmapData:
    def test_values_equal_csv_aggregates(self, results_csv):
        rows = io.load_results([results_csv])
        labels, buffers, matrix = render.heatmap_data(rows, "throughput_a_mbps")
        assert buffers == [1.0, 8.0]  # ascending left-to-right
        assert labels == ["fifo vs cubic", "dualpi2 vs cubic"]
        assert matrix[0][0] == 48.125
        assert matrix[0][1] == 45.5
        assert matrix[1][0] == 39.25

    def test_missing_cell_is_nan(self, results_csv):
        import math

        rows = io.load_results([results_csv])
        _, _, matrix = render.heatmap_data(rows, "throughput_a_mbps")
        assert math.isnan(matrix[1][1])

    def test_qdelay_heatmap_uses_qdelay_column(self, results_csv):
        rows = io.load_results([results_csv])
        _, _, matrix = render.heatmap_data(rows, "qdelay_a_ms")
        assert matrix[1][0] == 0.625

    def test_only_mean_rows_contribute(self, results_csv):
        rows = io.load_results([results_csv])
        _, _, matrix = render.heatmap_data(rows, "throughput_a_mbps")
        # per-seed rows are +/-1 around the mean; the cell must be the mean
        assert matrix[0][0] == 48.125

    def test_share_data_pairs_mean_with_std(self, results_csv):
        rows = io.load_results([results_csv])
        labels, buffers, mean, std = render.share_data(rows)
        assert len(labels) == 3
        assert mean[0] == 0.48125
        assert std == [0.01, 0.01, 0.01]


class TestRenderedAnnotations:
    def test_svg_contains_annotated_mean_values(self, results_csv, tmp_path):
        out = tmp_path / "heat.svg"
        rows = io.load_results([results_csv])
        render.render_heatmap(rows, "throughput_a_mbps", "t", out)
        svg = out.read_text()
        # svg.fonttype=none keeps annotations as literal text
        for cell in ("48.1", "45.5", "39.2"):
            assert cell in svg
        assert render.MISSING in svg  # the absent cell renders distinctly

    def test_timeseries_has_throughput_and_latency_panels(self, ts_csv, tmp_path):
        out = tmp_path / "fig1.svg"
        render.render_timeseries(io.load_timeseries([ts_csv]), out)
        svg = out.read_text()
        assert "Throughput" in svg
        assert "Latency" in svg
        assert "flow 0" in svg and "flow 1" in svg


class TestDeterminism:
    @pytest.mark.parametrize(
        "kind", ["heatmap-throughput", "heatmap-qdelay", "share-bars"]
    )
    def test_rerun_is_byte_identical(self, kind, results_csv, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert main([kind, "--in", str(results_csv), "--out", str(a)]) == 0
        assert main([kind, "--in", str(results_csv), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_timeseries_rerun_is_byte_identical(self, ts_csv, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert main(["timeseries", "--in", str(ts_csv), "--out", str(a)]) == 0
        assert main(["timeseries", "--in", str(ts_csv), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_png_output(self, results_csv, tmp_path):
        out = tmp_path / "heat.png"
        assert main(["heatmap-throughput", "--in", str(results_csv),
                     "--out", str(out)]) == 0
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_multiple_inputs_merge(self, results_csv, tmp_path):
        out = tmp_path / "heat.svg"
        code = main(
            ["heatmap-throughput", "--in", str(results_csv), str(results_csv),
             "--out", str(out)]
        )
        assert code == 0

    def test_schema_error_exits_nonzero_without_output(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("foo,bar\n1,2\n")
        out = tmp_path / "never.svg"
        assert main(["share-bars", "--in", str(bad), "--out", str(out)]) == 1
        assert "offending column 'scenario_id'" in capsys.readouterr().err
        assert not out.exists()

    def test_empty_csv_exits_nonzero_without_output(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(HEADER) + "\n")
        out = tmp_path / "never.svg"
        assert main(["heatmap-qdelay", "--in", str(empty), "--out", str(out)]) == 1
        assert "no data rows" in capsys.readouterr().err
        assert not out.exists()

    def test_unknown_kind_rejected(self, results_csv, tmp_path):
        with pytest.raises(SystemExit):
            main(["pie-chart", "--in", str(results_csv), "--out",
                  str(tmp_path / "x.svg")])
