"""Congestion-controller unit tests, oracle functions first."""

import pytest

from l4sim.backend import kernel

cc = kernel.cc
des = kernel.des

MS = des.MS
SEC = des.SEC


class TestPragueAlphaOracle:
    def test_hand_stepped_values(self):
        # g = 1/16: alpha' = 15/16 * alpha + 1/16 * frac
        assert cc.prague_alpha_update(0.5, 0.0) == pytest.approx(0.46875)
        assert cc.prague_alpha_update(0.0, 1.0) == pytest.approx(0.0625)
        assert cc.prague_alpha_update(1.0, 1.0) == pytest.approx(1.0)
        assert cc.prague_alpha_update(0.25, 0.5, gain=0.5) == pytest.approx(0.375)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            cc.prague_alpha_update(1.5, 0.0)
        with pytest.raises(ValueError):
            cc.prague_alpha_update(0.5, -0.1)
        with pytest.raises(ValueError):
            cc.prague_alpha_update(0.5, 0.5, gain=2.0)


class TestPragueReduceOracle:
    def test_hand_stepped_values(self):
        assert cc.prague_reduce(100.0, 0.5) == pytest.approx(75.0)
        assert cc.prague_reduce(100.0, 1.0) == pytest.approx(50.0)
        assert cc.prague_reduce(100.0, 0.0) == pytest.approx(100.0)

    def test_floor_at_min_cwnd(self):
        assert cc.prague_reduce(2.1, 1.0) == cc.MIN_CWND

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            cc.prague_reduce(10.0, 1.1)


class TestCubicWindowOracle:
    def test_window_at_inflection_equals_w_max(self):
        assert cc.cubic_window(4.0, 100.0, 4.0) == pytest.approx(100.0)

    def test_hand_stepped_value(self):
        # K for w_max=100, beta=0.7: (100*0.3/0.4)^(1/3) = 75^(1/3);
        # at t=0 the window is w_max - C*K^3 = 100 - 0.4*75 = 70.
        k = 75.0 ** (1.0 / 3.0)
        assert cc.cubic_window(0.0, 100.0, k) == pytest.approx(70.0)

    def test_growth_is_cubic_past_k(self):
        # one second past K: +C * 1^3
        assert cc.cubic_window(5.0, 100.0, 4.0) == pytest.approx(100.4)

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            cc.cubic_window(-1.0, 100.0, 4.0)


class TestControllerBase:
    def test_slow_start_doubles_per_window(self):
        c = cc.Controller()
        c.on_ack(c.cwnd, 10 * MS, 0)
        assert c.cwnd == pytest.approx(2 * cc.INITIAL_WINDOW)

    def test_congestion_avoidance_linear_growth(self):
        c = cc.Controller()
        c.cwnd = 10.0
        c.ssthresh = 5.0
        c.on_ack(10, 10 * MS, 0)
        assert c.cwnd == pytest.approx(11.0)

    def test_on_congestion_halves(self):
        c = cc.Controller()
        c.cwnd = 40.0
        c.on_congestion(0, 30)
        assert c.cwnd == pytest.approx(20.0)
        assert c.ssthresh == pytest.approx(20.0)

    def test_on_rto_collapses_to_min(self):
        c = cc.Controller()
        c.cwnd = 40.0
        c.on_rto(0)
        assert c.cwnd == cc.MIN_CWND
        assert c.ssthresh == pytest.approx(20.0)

    def test_window_pkts_floor(self):
        c = cc.Controller()
        c.cwnd = 1.2
        assert c.window_pkts() == 2
        c.cwnd = 7.9
        assert c.window_pkts() == 7


class TestReno:
    def test_plain_reno_is_not_ecn_capable(self):
        r = cc.Reno()
        assert r.ect == des.NOT_ECT
        assert not r.wants_classic_ece

    def test_ecn_reno_uses_ect0_and_per_round_ece(self):
        r = cc.Reno(ecn=True)
        assert r.ect == des.ECT0
        assert r.wants_classic_ece
        assert r.ece_per_round


class TestCubic:
    def test_ecn_flag(self):
        c = cc.Cubic(ecn=True)
        assert c.ect == des.ECT0
        assert c.wants_classic_ece
        assert not c.ece_per_round  # CWR held per congestion window

    def test_loss_applies_beta(self):
        c = cc.Cubic()
        c.cwnd = 100.0
        c.ssthresh = 1.0
        c.on_congestion(0, 90)
        assert c.cwnd == pytest.approx(70.0)
        assert c.w_max == pytest.approx(100.0)

    def test_fast_convergence_shrinks_w_max(self):
        c = cc.Cubic()
        c.cwnd = 100.0
        c.ssthresh = 1.0
        c.on_congestion(0, 90)
        # Second loss before regaining the peak: w_max = 0.65 * cwnd.
        c.on_congestion(SEC, 60)
        assert c.w_max == pytest.approx(70.0 * 0.65)
        assert c.cwnd == pytest.approx(49.0)

    def test_window_grows_toward_cubic_target(self):
        c = cc.Cubic()
        c.cwnd = 50.0
        c.ssthresh = 1.0
        c.on_congestion(0, 40)
        start = c.cwnd
        t = 0
        for _ in range(200):
            t += 10 * MS
            c.on_ack(1, 10 * MS, t)
        assert c.cwnd > start

    def test_rto_resets_epoch(self):
        c = cc.Cubic()
        c.cwnd = 50.0
        c.ssthresh = 1.0
        c.on_congestion(0, 40)
        c.on_rto(MS)
        assert c.epoch_start is None
        assert c.cwnd == cc.MIN_CWND


class TestFallbackDetector:
    def _feed_round(self, det, rtts):
        for r in rtts:
            det.on_rtt(r)
        return det.on_round_end()

    def test_undecided_until_first_mark(self):
        det = cc.FallbackDetector()
        for _ in range(20):
            assert self._feed_round(det, [10 * MS, 20 * MS]) == cc.UNDECIDED

    def test_large_spread_classifies_classic(self):
        det = cc.FallbackDetector(var_thresh_ns=2 * MS, eval_rounds=8)
        det.on_mark()
        for _ in range(8):
            got = self._feed_round(det, [10 * MS, 15 * MS])
        assert got == cc.CLASSIC_QUEUE

    def test_small_spread_classifies_l4s(self):
        det = cc.FallbackDetector(var_thresh_ns=2 * MS, eval_rounds=8)
        det.on_mark()
        for _ in range(8):
            got = self._feed_round(det, [10 * MS, 10 * MS + 500_000])
        assert got == cc.L4S_QUEUE

    def test_hysteresis_needs_consecutive_calm_periods(self):
        det = cc.FallbackDetector(var_thresh_ns=2 * MS, eval_rounds=2, calm_periods=3)
        det.on_mark()
        for _ in range(2):
            self._feed_round(det, [10 * MS, 15 * MS])
        assert det.classification == cc.CLASSIC_QUEUE
        # Calm windows (spread < thresh/2) must accumulate before flipping.
        for i in range(3):
            for _ in range(2):
                got = self._feed_round(det, [10 * MS, 10 * MS + 500_000])
            if i < 2:
                assert got == cc.CLASSIC_QUEUE
        assert got == cc.L4S_QUEUE


class TestPrague:
    def test_identity(self):
        p = cc.Prague()
        assert p.ect == des.ECT1
        assert p.uses_pacing
        assert p.mode == "scalable"
        assert p.alpha == 1.0

    def test_force_classify_normalization(self):
        assert cc.Prague(force_classify="classic").mode == "classic-fallback"
        assert cc.Prague(force_classify="l4s").mode == "scalable"
        assert cc.Prague(force_classify=cc.CLASSIC_QUEUE).mode == "classic-fallback"
        with pytest.raises(ValueError):
            cc.Prague(force_classify="bogus")

    def test_alpha_tracks_marked_fraction(self):
        p = cc.Prague()
        p.cwnd = 100.0
        p.ssthresh = 1.0
        for _ in range(200):
            p.on_round_end(10, 1, 10 * MS, 0)
        assert p.alpha == pytest.approx(0.1, rel=0.05)

    def test_marked_round_applies_proportional_reduction(self):
        p = cc.Prague()
        p.cwnd = 100.0
        p.ssthresh = 200.0
        p.alpha = 0.5
        before = p.cwnd
        p.on_round_end(10, 5, 10 * MS, 0)
        expected_alpha = cc.prague_alpha_update(0.5, 0.5)
        assert p.cwnd == pytest.approx(before * (1 - expected_alpha / 2))
        assert p.ssthresh <= p.cwnd

    def test_unmarked_round_does_not_reduce(self):
        p = cc.Prague()
        p.cwnd = 100.0
        p.on_round_end(10, 0, 10 * MS, 0)
        assert p.cwnd == 100.0

    def test_loss_halves_in_any_mode(self):
        for force in (None, "classic"):
            p = cc.Prague(force_classify=force)
            p.cwnd = 80.0
            p.on_congestion(0, 60)
            assert p.cwnd == pytest.approx(40.0)

    def test_fallback_mode_halves_once_per_cooldown(self):
        p = cc.Prague(force_classify="classic")
        p.cwnd = 64.0
        p.ssthresh = 200.0
        p.on_round_end(10, 5, 10 * MS, 0)
        assert p.cwnd == pytest.approx(32.0)
        # Next marked round is still inside the cooldown window.
        p.on_round_end(10, 5, 10 * MS, 0)
        assert p.cwnd == pytest.approx(32.0)
        p.on_round_end(10, 5, 10 * MS, 0)
        assert p.cwnd == pytest.approx(16.0)

    def test_rtt_independence_scales_growth_below_virtual_rtt(self):
        p = cc.Prague()
        p.cwnd = 100.0
        p.ssthresh = 50.0
        p._seen_mark = True
        p.on_ack(10, 5 * MS, 0)
        # 5 ms RTT against a 25 ms virtual RTT: growth scaled by 1/5.
        assert p.cwnd == pytest.approx(100.0 + (10 / 5) / 100.0)

    def test_no_scaling_before_first_mark(self):
        p = cc.Prague()
        p.cwnd = 100.0
        p.ssthresh = 50.0
        p.on_ack(10, 5 * MS, 0)
        assert p.cwnd == pytest.approx(100.1)

    def test_pacing_rate_follows_window(self):
        p = cc.Prague()
        p.cwnd = 100.0
        p.ssthresh = 50.0
        p.on_ack(0, 10 * MS, 0)
        expected = p.PACING_GAIN_CA * p.cwnd * cc.MSS * 8 * SEC / (10 * MS)
        assert p.pacing_rate == pytest.approx(expected, rel=0.02)


class TestBbr:
    def _round(self, b, acked, marked, dur, now):
        b.on_ack(acked, dur, now)
        b.on_round_end(acked, marked, dur, now)

    def test_version_validation(self):
        with pytest.raises(ValueError):
            cc.Bbr(version=3)
        with pytest.raises(ValueError):
            cc.Bbr(version=1, ecn_mode="classic")
        with pytest.raises(ValueError):
            cc.Bbr(version=2, ecn_mode="bogus")

    def test_ect_codepoints(self):
        assert cc.Bbr(version=2).ect == des.NOT_ECT
        assert cc.Bbr(version=2, ecn_mode="classic").ect == des.ECT0
        assert cc.Bbr(version=2, ecn_mode="accecn-l4s").ect == des.ECT1

    def test_startup_exits_after_flat_bandwidth(self):
        b = cc.Bbr(version=2)
        now = 0
        for _ in range(10):
            now += 10 * MS
            self._round(b, 100, 0, 10 * MS, now)
        assert b.mode in (cc.DRAIN, cc.PROBE_BW)

    def test_btlbw_is_windowed_max(self):
        b = cc.Bbr(version=2)
        self._round(b, 100, 0, 10 * MS, 10 * MS)
        first = b.btlbw
        self._round(b, 50, 0, 10 * MS, 20 * MS)
        assert b.btlbw == first  # max filter holds the peak

    def test_probe_rtt_window_is_four(self):
        b = cc.Bbr(version=2)
        b.mode = cc.PROBE_RTT
        assert b.window_pkts() == 4

    def test_v2_loss_cuts_inflight_hi(self):
        b = cc.Bbr(version=2)
        b.inflight_hi = 100.0
        b.on_congestion(0, 90)
        assert b.inflight_hi == pytest.approx(90 * 0.7)

    def test_v1_ignores_loss(self):
        b = cc.Bbr(version=1)
        before = b.inflight_hi
        b.on_congestion(0, 90)
        b.on_rto(0)
        assert b.inflight_hi == before

    def test_ecn_alpha_tracks_marks(self):
        b = cc.Bbr(version=2, ecn_mode="accecn-l4s")
        for now in range(1, 200):
            self._round(b, 10, 2, 10 * MS, now * 10 * MS)
        assert b.ecn_alpha == pytest.approx(0.2, rel=0.05)

    def test_accecn_mode_cuts_on_any_mark(self):
        b = cc.Bbr(version=2, ecn_mode="accecn-l4s")
        b.inflight_hi = 100.0
        b.ecn_alpha = 0.3
        self._round(b, 10, 1, 10 * MS, 10 * MS)
        assert b.inflight_hi < 100.0

    def test_classic_ecn_needs_majority_marks(self):
        b = cc.Bbr(version=2, ecn_mode="classic")
        b.inflight_hi = 100.0
        b.ecn_alpha = 0.3
        self._round(b, 10, 1, 10 * MS, 10 * MS)
        assert b.inflight_hi == 100.0


class TestBuildController:
    def test_mapping(self):
        assert isinstance(cc.build_controller("reno"), cc.Reno)
        assert isinstance(cc.build_controller("cubic"), cc.Cubic)
        assert isinstance(cc.build_controller("prague"), cc.Prague)
        assert cc.build_controller("bbrv1").version == 1
        assert cc.build_controller("bbrv2").version == 2

    def test_classic_ecn_flag_passthrough(self):
        assert cc.build_controller("cubic", ecn_mode="classic").wants_classic_ece
        assert not cc.build_controller("cubic", ecn_mode="off").wants_classic_ece

    def test_prague_fallback_wiring(self):
        p = cc.build_controller("prague", fallback=True)
        assert p.detector is not None
        assert cc.build_controller("prague").detector is None

    def test_unknown_name_raises(self):
        with pytest.raises(ValueError):
            cc.build_controller("vegas")
