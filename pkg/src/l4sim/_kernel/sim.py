"""Dumbbell simulation: two senders, delay node, one bottleneck router.

Data path per flow: sender -> 1 Gb/s access link -> +base_rtt/2 propagation
-> bottleneck queue + link -> receiver; acks return over an uncongested
reverse path adding the other +base_rtt/2.  Senders are infinitely
backlogged; loss is discovered through ack gaps (order per flow is
preserved end to end) with a 3-dup threshold, plus a coarse RTO.

run_trial() is a pure function of (config dict, seed): identical inputs
produce bit-identical metrics.
"""

from collections import deque

from . import aqm, cc
from .des import CE, MS, SEC, EventLoop, Link, Packet, SeededRng

MSS = cc.MSS
DUP_THRESH = 3
MIN_RTO_NS = 200 * MS
# Receiver acks every other packet; held acks flush on this timer, and
# immediately whenever the CE state changes (exact AccECN feedback).
DELACK_NS = 5 * MS
WATCHDOG_PERIOD_NS = SEC
MAX_PENDING_EVENTS = 5_000_000


class SimulationDiverged(Exception):
    """Event queue exceeded the safety bound; the run is aborted."""


class Router:
    """Bottleneck: configured queue discipline feeding one serializing link."""

    def __init__(self, loop, queue, rate_bps, flows):
        self.loop = loop
        self.queue = queue
        self.link_rate = rate_bps
        self.ser_ns = (MSS * 8 * SEC) // rate_bps
        self.busy = False
        self.flows = flows

    def arrive(self, pkt):
        now = self.loop.now
        ok = self.queue.enqueue(pkt, now)
        flow = self.flows[pkt.flow_id]
        if not ok:
            flow.dropped += 1
        overflow = getattr(self.queue, "overflow_dropped", None)
        if overflow:
            for victim in overflow:
                self.flows[victim.flow_id].dropped += 1
            overflow.clear()
        if not self.busy:
            self._serve()

    def _serve(self):
        now = self.loop.now
        pkt, dropped = self.queue.dequeue(now)
        for victim in dropped:
            self.flows[victim.flow_id].dropped += 1
        if pkt is None:
            self.busy = False
            return
        self.busy = True
        sojourn = now - pkt.enqueued_at
        ser = (pkt.size * 8 * SEC) // self.link_rate
        self.loop.schedule(now + ser, self._done, (pkt, sojourn))

    def _done(self, arg):
        pkt, sojourn = arg
        self.busy = False
        self.flows[pkt.flow_id].deliver(pkt, sojourn)
        self._serve()


class Flow:
    """One sender/receiver pair plus its per-flow metrics."""

    def __init__(self, fid, controller, fb_mode, loop, rng, access_rate,
                 half_rtt_ns, jitter_ns, start_at_ns):
        self.fid = fid
        self.cc = controller
        self.fb_mode = fb_mode  # "none" | "classic" | "accecn"
        self.loop = loop
        self.rng = rng
        self.access = Link(access_rate)
        self.half_rtt = half_rtt_ns
        self.jitter = jitter_ns
        self.start_at = start_at_ns
        self.router = None

        self.next_seq = 0
        self.inflight = 0
        self.outstanding = deque()
        self.skipped = []
        self.dup_acks = 0
        self.highest_acked = -1
        self.cong_guard = 0
        self.round_guard = 0
        self.round_start = start_at_ns
        self.round_acked = 0
        self.round_marked = 0
        self.cwr_pending = False
        self.ece_latch = False
        self.ece_guard = 0
        self.held = []  # receiver-side: (seq, marked, sent_at) awaiting ack
        self.delack_armed = False
        self.srtt = 0
        self.last_ack = start_at_ns
        self.rto_armed = False
        self.ignore_below = -1
        self.last_arrival = 0

        self.sent = 0
        self.delivered = 0
        self.delivered_bytes = 0
        self.dropped = 0
        self.lost = 0
        self.marks = 0
        self.rtt_sum = 0
        self.rtt_n = 0
        self.sojourns = []
        # Window accumulators for timeseries sampling.
        self.win_bytes = 0
        self.win_sojourn_sum = 0
        self.win_sojourn_n = 0

    # -- sending ----------------------------------------------------------

    def start(self):
        self.round_start = self.loop.now
        if self.cc.uses_pacing:
            self._pacer_armed = True
            self._pacer_fire()
        else:
            self.pump()
        self.round_guard = max(self.next_seq - 1, 0)

    def _send(self, now):
        seq = self.next_seq
        self.next_seq = seq + 1
        pkt = Packet(self.fid, seq, MSS, self.cc.ect, now, self.cwr_pending)
        self.cwr_pending = False
        self.outstanding.append(seq)
        self.inflight += 1
        self.sent += 1
        arrival = self.access.transmit(now, MSS) + self.half_rtt
        arrival += self.rng.jitter_ns(self.jitter)
        if arrival < self.last_arrival:  # jitter must not reorder the link
            arrival = self.last_arrival
        self.last_arrival = arrival
        self.loop.schedule(arrival, self.router.arrive, pkt)
        self._arm_rto(now)

    def pump(self):
        now = self.loop.now
        window = self.cc.window_pkts()
        while self.inflight < window:
            self._send(now)

    def _pacer_fire(self):
        now = self.loop.now
        if self.inflight < self.cc.window_pkts():
            self._send(now)
            rate = self.cc.pacing_rate
            gap = int(MSS * 8 * SEC / rate) if rate > 0 else MS
            self._pacer_armed = True
            self.loop.schedule(now + max(gap, 1), self._pacer_fire)
        else:
            self._pacer_armed = False

    def _wake_sender(self):
        if self.cc.uses_pacing:
            if not self._pacer_armed:
                self._pacer_armed = True
                self._pacer_fire()
        else:
            self.pump()

    # -- receiver / delivery ---------------------------------------------

    def deliver(self, pkt, sojourn):
        now = self.loop.now
        self.delivered += 1
        self.delivered_bytes += pkt.size
        self.win_bytes += pkt.size
        marked = pkt.ecn == CE
        if marked:
            self.marks += 1
        self.sojourns.append(sojourn)
        self.win_sojourn_sum += sojourn
        self.win_sojourn_n += 1
        if self.fb_mode == "classic":
            if pkt.cwr:
                self.ece_latch = False
            if marked:
                self.ece_latch = True
        if self.held and self.held[-1][1] != marked:
            self._flush_ack(now)
        # The RTT sample is fixed at delivery so a held ack does not read as
        # path delay.
        self.held.append((pkt.seq, marked, now - pkt.sent_at))
        if len(self.held) >= 2:
            self._flush_ack(now)
        elif not self.delack_armed:
            self.delack_armed = True
            self.loop.schedule(now + DELACK_NS, self._delack_fire)

    def _flush_ack(self, now):
        held = self.held
        if not held:
            return
        self.held = []
        ece = self.ece_latch if self.fb_mode == "classic" else False
        seqs = tuple(h[0] for h in held)
        marked_cnt = sum(1 for h in held if h[1])
        rtt = held[-1][2] + self.half_rtt
        self.loop.schedule(
            now + self.half_rtt, self._on_ack, (seqs, marked_cnt, ece, rtt)
        )

    def _delack_fire(self):
        self.delack_armed = False
        if self.held:
            self._flush_ack(self.loop.now)

    # -- ack processing ---------------------------------------------------

    def _on_ack(self, arg):
        seqs, marked_cnt, ece, rtt = arg
        now = self.loop.now
        self.last_ack = now
        self.srtt = rtt if self.srtt == 0 else (7 * self.srtt + rtt) // 8
        self.rtt_sum += rtt
        self.rtt_n += 1
        seq = seqs[-1]
        self.highest_acked = seq
        out = self.outstanding
        acked = 0
        for s in seqs:
            if s <= self.ignore_below:
                # Written off by an RTO; window state already accounts for it.
                continue
            while out and out[0] != s:
                self.skipped.append(out.popleft())
            if out:
                out.popleft()
            self.inflight -= 1
            acked += 1
        if not acked:
            self._wake_sender()
            return

        if self.skipped:
            self.dup_acks += 1
            if self.dup_acks >= DUP_THRESH:
                n = len(self.skipped)
                newest = self.skipped[-1]
                self.lost += n
                self.inflight -= n
                self.skipped.clear()
                self.dup_acks = 0
                # Losses belong to the flight they were sent in: packets
                # older than the last reduction do not trigger another one.
                if newest >= self.cong_guard:
                    self._congestion(now)

        self.round_acked += acked
        self.round_marked += marked_cnt

        self.cc.on_ack(acked, rtt, now)
        if ece and self.cc.wants_classic_ece:
            if self.cc.ece_per_round:
                # Latched ECE halves once per RTT round for as long as it
                # persists, even when the echoing acks belong to the
                # pre-reduction flight.
                if now >= self.ece_guard:
                    self.cc.on_congestion(now, self.inflight)
                    self.ece_guard = now + (self.srtt if self.srtt else rtt)
                    self.cong_guard = self.next_seq
                    self.cwr_pending = True
            elif seq >= self.cong_guard:
                self._congestion(now)

        if seq >= self.round_guard:
            dur = now - self.round_start
            self.cc.on_round_end(self.round_acked, self.round_marked, dur, now)
            self.round_acked = 0
            self.round_marked = 0
            self.round_start = now
            self._wake_sender()
            self.round_guard = max(self.next_seq - 1, seq + 1)
        else:
            self._wake_sender()

    def _congestion(self, now):
        """Multiplicative decrease, rate-limited to once per RTT round."""
        if self.highest_acked < self.cong_guard:
            return
        self.cc.on_congestion(now, self.inflight)
        self.cong_guard = self.next_seq
        self.cwr_pending = True

    # -- timers -----------------------------------------------------------

    def _rto_ns(self):
        return max(MIN_RTO_NS, 4 * self.srtt)

    def _arm_rto(self, now):
        if not self.rto_armed:
            self.rto_armed = True
            self.loop.schedule(now + self._rto_ns(), self._rto_check)

    def _rto_check(self):
        self.rto_armed = False
        now = self.loop.now
        if self.inflight <= 0 and not self.skipped:
            return
        deadline = self.last_ack + self._rto_ns()
        if now < deadline:
            self.rto_armed = True
            self.loop.schedule(deadline, self._rto_check)
            return
        # Timeout: everything outstanding is presumed gone.
        self.lost += len(self.outstanding) + len(self.skipped)
        self.outstanding.clear()
        self.skipped.clear()
        self.dup_acks = 0
        self.inflight = 0
        self.cc.on_rto(now)
        self.cong_guard = self.next_seq
        self.ignore_below = self.next_seq - 1
        self.round_guard = self.next_seq
        self.round_start = now
        self.round_acked = 0
        self.round_marked = 0
        self._wake_sender()


def _percentile(sorted_vals, frac):
    if not sorted_vals:
        return 0
    idx = int(frac * (len(sorted_vals) - 1))
    return sorted_vals[idx]


def run_trial(cfg, seed):
    """Run one seeded trial; returns {"flows": [metrics...], ...}.

    cfg keys: rate (bps), base_rtt (ns), buffer (bytes), duration (ns),
    queue {"kind": ..., params...}, flows [{cc, ecn, fallback,
    force_classify, start_at, ...}], and optionally access_rate, jitter,
    start_jitter, ts_period.
    """
    loop = EventLoop()
    rng = SeededRng(seed)
    half_rtt = cfg["base_rtt"] // 2
    access_rate = cfg.get("access_rate", 1_000_000_000)
    jitter = cfg.get("jitter", 10_000)
    start_jitter = cfg.get("start_jitter", 1 * MS)
    duration = cfg["duration"]
    ts_period = cfg.get("ts_period", 0)

    qspec = dict(cfg["queue"])
    kind = qspec.pop("kind")
    queue = aqm.build_queue(kind, cfg["buffer"], qspec)

    flows = []
    for i, fspec in enumerate(cfg["flows"]):
        controller = cc.build_controller(
            fspec["cc"],
            ecn_mode=fspec.get("ecn", "off"),
            fallback=fspec.get("fallback", False),
            force_classify=fspec.get("force_classify"),
            fallback_var_thresh_ns=fspec.get("fallback_var_thresh", 2 * MS),
            fallback_eval_rounds=fspec.get("fallback_eval_rounds", 8),
        )
        if fspec["cc"] == "prague" or fspec.get("ecn") == "accecn-l4s":
            fb_mode = "accecn"
        elif fspec.get("ecn") == "classic":
            fb_mode = "classic"
        else:
            fb_mode = "none"
        start_at = fspec.get("start_at", 0) + rng.jitter_ns(start_jitter)
        flows.append(
            Flow(i, controller, fb_mode, loop, rng, access_rate, half_rtt,
                 jitter, start_at)
        )

    router = Router(loop, queue, cfg["rate"], flows)
    for flow in flows:
        flow.router = router
        loop.schedule(flow.start_at, flow.start)

    if hasattr(queue, "pi_update"):
        period = queue.cfg.t_update_ns

        def _pi_tick():
            queue.pi_update(loop.now)
            if loop.now + period <= duration:
                loop.schedule(loop.now + period, _pi_tick)

        loop.schedule(period, _pi_tick)

    ts_rows = []
    if ts_period:

        def _sample():
            t = loop.now
            for flow in flows:
                tput = flow.win_bytes * 8 * SEC / ts_period / 1e6
                qd = (
                    flow.win_sojourn_sum / flow.win_sojourn_n / MS
                    if flow.win_sojourn_n
                    else 0.0
                )
                ts_rows.append(
                    (t / SEC, flow.fid, tput, flow.srtt / MS, qd,
                     flow.cc.window_pkts())
                )
                flow.win_bytes = 0
                flow.win_sojourn_sum = 0
                flow.win_sojourn_n = 0
            if t + ts_period <= duration:
                loop.schedule(t + ts_period, _sample)

        loop.schedule(ts_period, _sample)

    def _watchdog():
        if len(loop._heap) > MAX_PENDING_EVENTS:
            raise SimulationDiverged(
                f"{len(loop._heap)} pending events at t={loop.now} ns"
            )
        if loop.now + WATCHDOG_PERIOD_NS <= duration:
            loop.schedule(loop.now + WATCHDOG_PERIOD_NS, _watchdog)

    loop.schedule(WATCHDOG_PERIOD_NS, _watchdog)

    loop.run_until(duration)

    dur_s = duration / SEC
    out_flows = []
    for flow in flows:
        srt = sorted(flow.sojourns)
        mean_q = sum(srt) / len(srt) if srt else 0
        out_flows.append(
            {
                "throughput_bps": flow.delivered_bytes * 8 / dur_s,
                "delivered_bytes": flow.delivered_bytes,
                "delivered_pkts": flow.delivered,
                "sent_pkts": flow.sent,
                "dropped_pkts": flow.dropped,
                "lost_pkts": flow.lost,
                "marks": flow.marks,
                "mean_rtt_ns": flow.rtt_sum / flow.rtt_n if flow.rtt_n else 0,
                "mean_qdelay_ns": mean_q,
                "p99_qdelay_ns": _percentile(srt, 0.99),
                "residual_pkts": flow.sent - flow.delivered - flow.dropped,
            }
        )
    return {
        "flows": out_flows,
        "events": loop.dispatched,
        "queue_marks": queue.marks,
        "queue_drops": queue.drops,
        "seed": seed,
        "ts": ts_rows,
    }
