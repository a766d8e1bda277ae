"""Queue-discipline unit tests: FIFO, FIFO+ECN, CoDel, FQ variants, DualPI2."""

import pytest

from l4sim.backend import kernel

aqm = kernel.aqm
des = kernel.des

MS = des.MS
MSS = 1500


def mk(flow_id=0, seq=0, ecn=des.NOT_ECT, size=MSS):
    return des.Packet(flow_id, seq, size, ecn, 0)


class TestFifo:
    def test_fifo_order(self):
        q = aqm.FifoQueue(10 * MSS)
        for i in range(3):
            assert q.enqueue(mk(seq=i), 0)
        got = [q.dequeue(0)[0].seq for _ in range(3)]
        assert got == [0, 1, 2]

    def test_tail_drop_on_overflow(self):
        q = aqm.FifoQueue(2 * MSS)
        assert q.enqueue(mk(seq=0), 0)
        assert q.enqueue(mk(seq=1), 0)
        assert not q.enqueue(mk(seq=2), 0)
        assert q.drops == 1
        assert len(q) == 2

    def test_backlog_tracks_bytes(self):
        q = aqm.FifoQueue(10 * MSS)
        q.enqueue(mk(), 0)
        q.enqueue(mk(), 0)
        assert q.backlog == 2 * MSS
        q.dequeue(0)
        assert q.backlog == MSS

    def test_never_marks(self):
        q = aqm.FifoQueue(10 * MSS)
        q.enqueue(mk(ecn=des.ECT1), 0)
        pkt, _ = q.dequeue(50 * MS)
        assert pkt.ecn == des.ECT1
        assert q.marks == 0

    def test_empty_dequeue(self):
        q = aqm.FifoQueue(10 * MSS)
        assert q.dequeue(0) == (None, ())

    def test_invalid_limit(self):
        with pytest.raises(ValueError):
            aqm.FifoQueue(0)


class TestFifoEcn:
    def test_marks_ect_above_threshold(self):
        q = aqm.FifoEcnQueue(10 * MSS, ecn_threshold_ns=5 * MS)
        for ecn in (des.ECT0, des.ECT1):
            q.enqueue(mk(ecn=ecn), 0)
            pkt, _ = q.dequeue(6 * MS)
            assert pkt.ecn == des.CE
        assert q.marks == 2

    def test_no_mark_below_threshold(self):
        q = aqm.FifoEcnQueue(10 * MSS, ecn_threshold_ns=5 * MS)
        q.enqueue(mk(ecn=des.ECT1), 0)
        pkt, _ = q.dequeue(4 * MS)
        assert pkt.ecn == des.ECT1

    def test_not_ect_never_marked(self):
        q = aqm.FifoEcnQueue(10 * MSS, ecn_threshold_ns=5 * MS)
        q.enqueue(mk(ecn=des.NOT_ECT), 0)
        pkt, _ = q.dequeue(50 * MS)
        assert pkt.ecn == des.NOT_ECT
        assert q.marks == 0


class TestCodelControlLaw:
    def test_hand_stepped_values(self):
        assert aqm.codel_control_law(0, 1, 100 * MS) == 100 * MS
        assert aqm.codel_control_law(0, 4, 100 * MS) == 50 * MS
        assert aqm.codel_control_law(7 * MS, 1, 100 * MS) == 107 * MS

    def test_interval_shrinks_with_count(self):
        gaps = [
            aqm.codel_control_law(0, n, 100 * MS) for n in (1, 2, 4, 9, 16)
        ]
        assert gaps == sorted(gaps, reverse=True)

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            aqm.codel_control_law(0, 0, 100 * MS)


class TestCodel:
    def _standing_queue(self, ecn):
        q = aqm.CodelQueue(100 * MSS, target_ns=5 * MS, interval_ns=100 * MS)
        for i in range(20):
            q.enqueue(mk(seq=i, ecn=ecn), 0)
        return q

    def test_below_target_never_strikes(self):
        q = aqm.CodelQueue(100 * MSS)
        q.enqueue(mk(ecn=des.ECT1), 0)
        pkt, dropped = q.dequeue(4 * MS)
        assert pkt.ecn == des.ECT1
        assert not dropped

    def test_marks_ect_after_persistent_standing_queue(self):
        q = self._standing_queue(des.ECT1)
        pkt, _ = q.dequeue(6 * MS)  # first above target, arms the detector
        assert pkt.ecn == des.ECT1
        pkt, dropped = q.dequeue(210 * MS)  # above for > 2 intervals
        assert pkt.ecn == des.CE
        assert not dropped
        assert q.marks == 1

    def test_drops_not_ect_instead_of_marking(self):
        q = self._standing_queue(des.NOT_ECT)
        q.dequeue(6 * MS)
        pkt, dropped = q.dequeue(210 * MS)
        assert len(dropped) == 1
        assert dropped[0].ecn == des.NOT_ECT
        assert q.drops == 1
        assert pkt is not None  # the next head is still delivered

    def test_strike_rate_increases_while_dropping(self):
        q = self._standing_queue(des.ECT1)
        q.dequeue(6 * MS)
        q.dequeue(210 * MS)
        t = 210 * MS
        for _ in range(10):
            t += 30 * MS
            q.dequeue(t)
            q.enqueue(mk(ecn=des.ECT1), t)
        assert q.marks >= 2
        assert q._count > 1

    def test_overflow_still_tail_drops(self):
        q = aqm.CodelQueue(2 * MSS)
        q.enqueue(mk(), 0)
        q.enqueue(mk(), 0)
        assert not q.enqueue(mk(), 0)
        assert q.drops == 1


class TestFq:
    def test_round_robin_alternates_flows(self):
        q = aqm.FqQueue(100 * MSS)
        for i in range(3):
            q.enqueue(mk(flow_id=0, seq=i), 0)
        for i in range(3):
            q.enqueue(mk(flow_id=1, seq=10 + i), 0)
        order = [q.dequeue(0)[0].flow_id for _ in range(6)]
        assert order == [0, 1, 0, 1, 0, 1]

    def test_overflow_evicts_fattest_flow(self):
        q = aqm.FqQueue(4 * MSS)
        for i in range(4):
            q.enqueue(mk(flow_id=0, seq=i), 0)
        assert q.enqueue(mk(flow_id=1, seq=99), 0)
        assert len(q.overflow_dropped) == 1
        assert q.overflow_dropped[0].flow_id == 0
        assert q.drops == 1

    def test_threshold_marking_per_subqueue(self):
        q = aqm.FqQueue(100 * MSS, ecn_threshold_ns=5 * MS)
        q.enqueue(mk(flow_id=0, ecn=des.ECT1), 0)
        pkt, _ = q.dequeue(6 * MS)
        assert pkt.ecn == des.CE
        assert q.marks == 1

    def test_not_ect_unmarked(self):
        q = aqm.FqQueue(100 * MSS, ecn_threshold_ns=5 * MS)
        q.enqueue(mk(flow_id=0, ecn=des.NOT_ECT), 0)
        pkt, _ = q.dequeue(6 * MS)
        assert pkt.ecn == des.NOT_ECT

    def test_backlog_bookkeeping(self):
        q = aqm.FqQueue(100 * MSS)
        q.enqueue(mk(flow_id=0), 0)
        q.enqueue(mk(flow_id=1), 0)
        assert q.backlog == 2 * MSS
        q.dequeue(0)
        q.dequeue(0)
        assert q.backlog == 0
        assert q.dequeue(0)[0] is None

    def test_fq_codel_runs_codel_per_flow(self):
        q = aqm.FqQueue(100 * MSS, inner="codel")
        assert q.kind == "fq-codel"
        for i in range(20):
            q.enqueue(mk(flow_id=0, seq=i, ecn=des.ECT1), 0)
        q.dequeue(6 * MS)
        pkt, _ = q.dequeue(210 * MS)
        assert pkt.ecn == des.CE
        assert q.marks == 1

    def test_invalid_inner(self):
        with pytest.raises(ValueError):
            aqm.FqQueue(100 * MSS, inner="red")


class TestDualPi2Algebra:
    def test_classify(self):
        assert aqm.dualpi2_classify(des.ECT1) == "L"
        assert aqm.dualpi2_classify(des.CE) == "L"
        assert aqm.dualpi2_classify(des.ECT0) == "C"
        assert aqm.dualpi2_classify(des.NOT_ECT) == "C"

    def test_probabilities_coupling(self):
        p_c, p_l = aqm.dualpi2_probabilities(0.1, 2.0)
        assert p_c == pytest.approx(0.01)
        assert p_l == pytest.approx(0.2)

    def test_l4s_probability_saturates(self):
        _, p_l = aqm.dualpi2_probabilities(0.8, 2.0)
        assert p_l == 1.0

    def test_probability_validation(self):
        with pytest.raises(ValueError):
            aqm.dualpi2_probabilities(1.5, 2.0)
        with pytest.raises(ValueError):
            aqm.dualpi2_probabilities(0.5, 0.0)

    def test_pi_update_moves_toward_target(self):
        cfg = aqm.DualPi2Config()
        up = aqm.dualpi2_pi_update(0.1, 20 * MS, 20 * MS, cfg)
        down = aqm.dualpi2_pi_update(0.1, 1 * MS, 1 * MS, cfg)
        assert up > 0.1 > down

    def test_pi_update_clamps(self):
        cfg = aqm.DualPi2Config()
        assert aqm.dualpi2_pi_update(0.0, 0, 50 * MS, cfg) == 0.0
        assert aqm.dualpi2_pi_update(1.0, 500 * MS, 0, cfg) == 1.0

    def test_config_rejects_step_above_target(self):
        with pytest.raises(ValueError):
            aqm.DualPi2Config(pi_target_ns=1 * MS, step_thresh_ns=2 * MS)


class TestDualPi2Queue:
    def test_l_queue_has_priority(self):
        q = aqm.DualPi2Queue(100 * MSS)
        q.enqueue(mk(ecn=des.ECT0, seq=1), 0)
        q.enqueue(mk(ecn=des.ECT1, seq=2), 0)
        pkt, _ = q.dequeue(10 * MS)
        assert pkt.seq == 2

    def test_time_shift_eventually_serves_classic(self):
        q = aqm.DualPi2Queue(100 * MSS)
        q.enqueue(mk(ecn=des.ECT0, seq=1), 0)
        q.enqueue(mk(ecn=des.ECT1, seq=2), 50 * MS)
        pkt, _ = q.dequeue(55 * MS)  # C head waited 55 ms vs 5 ms + 40 ms shift
        assert pkt.seq == 1

    def test_step_threshold_marks_l4s(self):
        q = aqm.DualPi2Queue(100 * MSS)
        q.enqueue(mk(ecn=des.ECT1), 0)
        pkt, _ = q.dequeue(2 * MS)
        assert pkt.ecn == des.CE
        assert q.marks == 1

    def test_below_step_threshold_unmarked(self):
        q = aqm.DualPi2Queue(100 * MSS)
        q.enqueue(mk(ecn=des.ECT1), 0)
        pkt, _ = q.dequeue(MS // 2)
        assert pkt.ecn == des.ECT1

    def test_classic_recur_marks_ect0_and_drops_not_ect(self):
        # p' = 0.5 -> p_classic = 0.25: every 4th classic packet is struck.
        q = aqm.DualPi2Queue(100 * MSS)
        q.p_prime = 0.5
        for i in range(8):
            q.enqueue(mk(ecn=des.ECT0, seq=i), 0)
        marked = 0
        for _ in range(8):
            pkt, _ = q.dequeue(0)
            marked += pkt.ecn == des.CE
        assert marked == 2

        q2 = aqm.DualPi2Queue(100 * MSS)
        q2.p_prime = 0.5
        for i in range(8):
            q2.enqueue(mk(ecn=des.NOT_ECT, seq=i), 0)
        delivered, dropped = 0, 0
        while True:
            pkt, drops = q2.dequeue(0)
            dropped += len(drops)
            if pkt is None:
                break
            delivered += 1
        assert dropped == 2
        assert delivered == 6

    def test_pi_update_reacts_to_queue_delay(self):
        q = aqm.DualPi2Queue(100 * MSS)
        q.enqueue(mk(ecn=des.ECT0), 0)
        q.pi_update(30 * MS)  # 30 ms sojourn vs 5 ms target
        assert q.p_prime > 0.0

    def test_overflow_tail_drops(self):
        q = aqm.DualPi2Queue(2 * MSS)
        q.enqueue(mk(ecn=des.ECT1), 0)
        q.enqueue(mk(ecn=des.ECT0), 0)
        assert not q.enqueue(mk(), 0)
        assert q.drops == 1


class TestBuildQueue:
    def test_kinds(self):
        cases = {
            "fifo": aqm.FifoQueue,
            "fifo-ecn": aqm.FifoEcnQueue,
            "codel": aqm.CodelQueue,
            "dualpi2": aqm.DualPi2Queue,
        }
        for kind, cls in cases.items():
            assert type(aqm.build_queue(kind, 10 * MSS, {})) is cls
        assert aqm.build_queue("fq", 10 * MSS, {}).kind == "fq"
        assert aqm.build_queue("fq-codel", 10 * MSS, {}).kind == "fq-codel"

    def test_params_passthrough(self):
        q = aqm.build_queue("fifo-ecn", 10 * MSS, {"ecn_threshold_ns": 7 * MS})
        assert q.threshold == 7 * MS
        d = aqm.build_queue("dualpi2", 10 * MSS, {"coupling": 3.0})
        assert d.cfg.coupling == 3.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            aqm.build_queue("red", 10 * MSS, {})
