"""CSV schema round-trips, the recommendation table, and the CLI."""

import pytest

from l4sim import cli, results
from l4sim.recommend import NO_DATA, NOT_OK, OK, recommend, render_table

CONFIG_YAML = """\
duration_s: 2.0
trials: 2
grid:
  queues: [fifo, dualpi2]
  buffers: [1]
  opponents:
    - {cc: cubic, ecn: off}
single_runs:
  - id: solo
    queue: {kind: fifo-ecn}
    buffer_bdp: 2.0
    flow: {cc: prague, ecn: accecn-l4s}
"""


def mk_row(**kw):
    base = dict(
        scenario_id="fifo_1bdp_prague_cubic",
        queue="fifo",
        buffer_bdp=1.0,
        flow_a_cc="prague",
        flow_a_ecn="accecn-l4s",
        flow_a_fallback=False,
        flow_b_cc="cubic",
        flow_b_ecn="off",
        seed="mean",
        throughput_a_mbps=48.125,
        throughput_b_mbps=49.875,
        share_a=0.4910714285714286,
        qdelay_a_ms=3.25,
        qdelay_b_ms=3.5,
        rtt_a_ms=13.25,
        rtt_b_ms=13.5,
        marks=120.0,
        drops=4.0,
    )
    base.update(kw)
    return results.ResultRow(**base)


class TestCsvRoundTrip:
    def test_write_read_identity(self, tmp_path):
        rows = [mk_row(seed="1"), mk_row(seed="2"), mk_row()]
        path = tmp_path / "results.csv"
        results.write_csv(path, rows)
        assert results.read_csv(path) == rows

    def test_float_precision_survives(self, tmp_path):
        row = mk_row(share_a=1 / 3, throughput_a_mbps=0.1 + 0.2)
        path = tmp_path / "results.csv"
        results.write_csv(path, [row])
        back = results.read_csv(path)[0]
        assert back.share_a == row.share_a
        assert back.throughput_a_mbps == row.throughput_a_mbps

    def test_schema_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("foo,bar\n1,2\n")
        with pytest.raises(ValueError, match="schema"):
            results.read_csv(path)

    def test_timeseries_writer(self, tmp_path):
        path = tmp_path / "ts.csv"
        results.write_timeseries(path, [(0.5, 0, 48.0, 12.5, 2.5, 40)])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(results.TS_COLUMNS)
        assert lines[1].startswith("0.5,0,48.0")


class TestRecommend:
    def test_ok_when_above_floor(self):
        verdicts = recommend([mk_row()], fair_lo=0.35)
        got = {
            (v.buffer_type, v.opponent, v.fallback): v.verdict for v in verdicts
        }
        assert got[("SQ w/o ECN", "Cubic", False)] == OK
        assert got[("SQ w/o ECN", "Cubic", True)] == NO_DATA
        assert got[("DualPI2", "BBRv2", False)] == NO_DATA

    def test_not_ok_below_floor(self):
        row = mk_row(share_a=0.2)
        verdicts = recommend([row], fair_lo=0.35)
        v = next(
            v
            for v in verdicts
            if (v.buffer_type, v.opponent, v.fallback)
            == ("SQ w/o ECN", "Cubic", False)
        )
        assert v.verdict == NOT_OK
        assert v.violations
        assert v.min_share == pytest.approx(0.2)

    def test_hogging_also_fails_the_floor(self):
        # The floor is symmetric: Prague taking 0.9 starves the opponent.
        verdicts = recommend([mk_row(share_a=0.9)], fair_lo=0.35)
        v = next(v for v in verdicts if v.verdict == NOT_OK)
        assert v.min_share == pytest.approx(0.1)

    def test_non_mean_rows_ignored(self):
        verdicts = recommend([mk_row(seed="1", share_a=0.01)])
        assert all(v.verdict == NO_DATA for v in verdicts)

    def test_render_table_shape(self):
        text = render_table(recommend([mk_row()]), fair_lo=0.35)
        assert "Buffer Type" in text
        assert "Fallback OFF" in text
        assert "SQ w/o ECN" in text


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "matrix.yaml"
    path.write_text(CONFIG_YAML)
    return path


class TestCli:
    def test_list_scenarios(self, config_file, capsys):
        assert cli.main(["list-scenarios", "--config", str(config_file)]) == 0
        out = capsys.readouterr().out
        assert "fifo_1bdp_prague_cubic" in out
        assert "dualpi2_1bdp_prague_cubic" in out
        assert "solo (single flow)" in out
        assert "2 grid cells, 1 single runs" in out

    def test_run_writes_results_and_timeseries(self, config_file, tmp_path):
        out_dir = tmp_path / "out"
        code = cli.main(
            ["run", "--config", str(config_file), "--out", str(out_dir), "--jobs", "2"]
        )
        assert code == 0
        rows = results.read_csv(out_dir / "results.csv")
        # 2 cells x (2 trials + mean + std)
        assert len(rows) == 8
        assert {r.seed for r in rows} == {"1", "2", "mean", "std"}
        assert (out_dir / "ts_solo.csv").exists()

    def test_run_then_recommend(self, config_file, tmp_path, capsys):
        out_dir = tmp_path / "out"
        assert cli.main(["run", "--config", str(config_file), "--out", str(out_dir)]) == 0
        capsys.readouterr()
        assert cli.main(["recommend", "--in", str(out_dir)]) == 0
        out = capsys.readouterr().out
        assert "Buffer Type" in out

    def test_seed_base_changes_seed_column(self, config_file, tmp_path):
        out_dir = tmp_path / "out"
        cli.main(
            ["run", "--config", str(config_file), "--out", str(out_dir),
             "--seed-base", "7"]
        )
        rows = results.read_csv(out_dir / "results.csv")
        assert {r.seed for r in rows} == {"7", "8", "mean", "std"}

    def test_out_dir_from_environment(self, config_file, tmp_path, monkeypatch):
        env_dir = tmp_path / "envout"
        monkeypatch.setenv("L4SIM_OUT", str(env_dir))
        assert cli.main(["run", "--config", str(config_file)]) == 0
        assert (env_dir / "results.csv").exists()

    def test_missing_config_exits_1(self, tmp_path, capsys):
        code = cli.main(["run", "--config", str(tmp_path / "nope.yaml")])
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_invalid_config_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("grid:\n  queues: [red]\n  buffers: [1]\n"
                       "  opponents:\n    - {cc: cubic}\n")
        code = cli.main(["run", "--config", str(bad), "--out", str(tmp_path)])
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_trial_failure_exits_2(self, config_file, monkeypatch, capsys, tmp_path):
        from l4sim import matrix as matrix_mod

        def boom(*a, **kw):
            raise RuntimeError("diverged")

        monkeypatch.setattr(matrix_mod, "run_matrix", boom)
        code = cli.main(["run", "--config", str(config_file), "--out", str(tmp_path)])
        assert code == 2
        assert "trial failure" in capsys.readouterr().err

    def test_recommend_empty_dir_exits_1(self, tmp_path, capsys):
        assert cli.main(["recommend", "--in", str(tmp_path)]) == 1
        assert "config error" in capsys.readouterr().err
