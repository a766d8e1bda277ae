"""Bottleneck queue disciplines behind a single enqueue/dequeue contract.

Disciplines: drop-tail FIFO, FIFO with a static sojourn-time ECN threshold,
CoDel (ECN variant), per-flow fair queuing with either a static threshold or
CoDel per sub-queue, and the DualPI2 coupled dual-queue AQM.

Contract:
  enqueue(pkt, now) -> bool           False means tail-dropped (never queued)
  dequeue(now)      -> (pkt | None, dropped)
where `dropped` lists packets discarded while selecting the next one to send.
Marking sets CE only on ECT(0)/ECT(1) packets; where a discipline would mark
a NotECT packet it drops instead.
"""

from collections import deque

from .des import CE, ECT0, ECT1, MS, SEC

_DEFAULT_MTU = 1500


def _mark(pkt):
    pkt.ecn = CE


class FifoQueue:
    """Single drop-tail queue, no marking."""

    kind = "fifo"

    def __init__(self, limit_bytes):
        if limit_bytes <= 0:
            raise ValueError("buffer limit must be positive")
        self.limit = limit_bytes
        self.backlog = 0
        self.marks = 0
        self.drops = 0
        self._q = deque()

    def __len__(self):
        return len(self._q)

    def enqueue(self, pkt, now):
        if self.backlog + pkt.size > self.limit:
            self.drops += 1
            return False
        pkt.enqueued_at = now
        self._q.append(pkt)
        self.backlog += pkt.size
        return True

    def dequeue(self, now):
        if not self._q:
            return None, ()
        pkt = self._q.popleft()
        self.backlog -= pkt.size
        return pkt, ()


class FifoEcnQueue(FifoQueue):
    """Drop-tail FIFO that CE-marks ECN-capable packets whose sojourn time
    exceeds a static threshold, checked at dequeue (head-packet sojourn)."""

    kind = "fifo-ecn"

    def __init__(self, limit_bytes, ecn_threshold_ns=5 * MS):
        super().__init__(limit_bytes)
        self.threshold = ecn_threshold_ns

    def dequeue(self, now):
        pkt, dropped = super().dequeue(now)
        if pkt is not None and now - pkt.enqueued_at > self.threshold:
            if pkt.ecn == ECT0 or pkt.ecn == ECT1:
                _mark(pkt)
                self.marks += 1
        return pkt, dropped


def codel_control_law(drop_next_ns, count, interval_ns):
    """Next drop/mark time: drop_next + interval / sqrt(count)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return drop_next_ns + int(interval_ns / count**0.5)


class CodelQueue:
    """CoDel per the reference state machine (5 ms target, 100 ms interval),
    with the ECN option: ECT packets are marked where the algorithm would
    drop, NotECT packets are dropped."""

    kind = "codel"

    def __init__(self, limit_bytes, target_ns=5 * MS, interval_ns=100 * MS):
        if limit_bytes <= 0:
            raise ValueError("buffer limit must be positive")
        self.limit = limit_bytes
        self.target = target_ns
        self.interval = interval_ns
        self.backlog = 0
        self.marks = 0
        self.drops = 0
        self._q = deque()
        self._first_above = 0
        self._drop_next = 0
        self._count = 0
        self._lastcount = 0
        self._dropping = False

    def __len__(self):
        return len(self._q)

    def enqueue(self, pkt, now):
        if self.backlog + pkt.size > self.limit:
            self.drops += 1
            return False
        pkt.enqueued_at = now
        self._q.append(pkt)
        self.backlog += pkt.size
        return True

    def _pop(self, now):
        # Returns (pkt, ok_to_drop); tracks how long sojourn has stayed
        # above target (the standing-queue detector).
        if not self._q:
            self._first_above = 0
            return None, False
        pkt = self._q.popleft()
        self.backlog -= pkt.size
        sojourn = now - pkt.enqueued_at
        if sojourn < self.target or self.backlog <= _DEFAULT_MTU:
            self._first_above = 0
            return pkt, False
        if self._first_above == 0:
            self._first_above = now + self.interval
            return pkt, False
        return pkt, now >= self._first_above

    def _strike(self, pkt, dropped):
        """Apply one drop/mark decision; True if pkt was delivered (marked)."""
        if pkt.ecn == ECT0 or pkt.ecn == ECT1:
            _mark(pkt)
            self.marks += 1
            return True
        dropped.append(pkt)
        self.drops += 1
        return False

    def dequeue(self, now):
        dropped = []
        pkt, ok = self._pop(now)
        if self._dropping:
            if not ok:
                self._dropping = False
            else:
                while pkt is not None and self._dropping and now >= self._drop_next:
                    self._count += 1
                    if self._strike(pkt, dropped):
                        self._drop_next = codel_control_law(
                            self._drop_next, self._count, self.interval
                        )
                        return pkt, dropped
                    pkt, ok = self._pop(now)
                    if not ok:
                        self._dropping = False
                    else:
                        self._drop_next = codel_control_law(
                            self._drop_next, self._count, self.interval
                        )
        elif ok and (
            now - self._drop_next < self.interval
            or now - self._first_above >= self.interval
        ):
            delivered = self._strike(pkt, dropped)
            self._dropping = True
            # Re-entering drop state soon after leaving it resumes at a
            # higher rate instead of restarting from 1.
            delta = self._count - self._lastcount
            if delta > 1 and now - self._drop_next < 16 * self.interval:
                self._count = delta
            else:
                self._count = 1
            self._lastcount = self._count
            self._drop_next = codel_control_law(now, self._count, self.interval)
            if delivered:
                return pkt, dropped
            pkt, ok = self._pop(now)
        return pkt, dropped


class _SubQueue:
    __slots__ = ("q", "deficit", "bytes", "active")

    def __init__(self):
        self.q = deque()
        self.deficit = 0
        self.bytes = 0
        self.active = False


class FqQueue:
    """Deficit-round-robin fair queuing with per-flow isolation.

    Sub-queues are indexed directly by flow id (collision-free for the
    two-flow scenarios under study).  inner="threshold" applies a static
    sojourn CE threshold per sub-queue (tc-fq style); inner="codel" runs a
    full CoDel instance per flow (fq_codel).  The byte budget is shared;
    on overflow the head of the fattest sub-queue is dropped, which is what
    preserves isolation against a buffer-filling flow.
    """

    def __init__(
        self,
        limit_bytes,
        inner="threshold",
        ecn_threshold_ns=5 * MS,
        target_ns=5 * MS,
        interval_ns=100 * MS,
        quantum=_DEFAULT_MTU,
    ):
        if limit_bytes <= 0:
            raise ValueError("buffer limit must be positive")
        if inner not in ("threshold", "codel"):
            raise ValueError(f"unknown inner AQM {inner!r}")
        self.kind = "fq" if inner == "threshold" else "fq-codel"
        self.limit = limit_bytes
        self.inner = inner
        self.threshold = ecn_threshold_ns
        self.quantum = quantum
        self.backlog = 0
        self.marks = 0
        self.drops = 0
        # Overflow victims surface here; the simulation drains the list
        # after each enqueue so the owning flow's drop count stays correct.
        self.overflow_dropped = []
        self._flows = {}
        self._active = deque()
        self._codels = {}
        self._target = target_ns
        self._interval = interval_ns

    def __len__(self):
        return sum(len(f.q) for f in self._flows.values())

    def _sub(self, flow_id):
        sub = self._flows.get(flow_id)
        if sub is None:
            sub = _SubQueue()
            self._flows[flow_id] = sub
            if self.inner == "codel":
                self._codels[flow_id] = CodelQueue(
                    self.limit, self._target, self._interval
                )
        return sub

    def enqueue(self, pkt, now):
        if self.backlog + pkt.size > self.limit:
            fat_id = max(self._flows, key=lambda f: self._flows[f].bytes, default=None)
            if fat_id is None or not self._flows[fat_id].q:
                self.drops += 1
                return False
            victim_sub = self._flows[fat_id]
            victim = victim_sub.q.popleft()
            victim_sub.bytes -= victim.size
            self.backlog -= victim.size
            self.drops += 1
            self.overflow_dropped.append(victim)
            if self.backlog + pkt.size > self.limit:
                self.drops += 1
                return False
        sub = self._sub(pkt.flow_id)
        pkt.enqueued_at = now
        if not sub.active:
            sub.deficit = 0
            sub.active = True
            self._active.append(pkt.flow_id)
        sub.q.append(pkt)
        sub.bytes += pkt.size
        self.backlog += pkt.size
        return True

    def dequeue(self, now):
        dropped = []
        while self._active:
            flow_id = self._active[0]
            sub = self._flows[flow_id]
            if not sub.q:
                self._active.popleft()
                sub.active = False
                continue
            head = sub.q[0]
            if sub.deficit < head.size:
                sub.deficit += self.quantum
                self._active.rotate(-1)
                continue
            pkt = self._take(flow_id, sub, now, dropped)
            if pkt is None:
                continue
            sub.deficit -= pkt.size
            return pkt, dropped
        return None, dropped

    def _take(self, flow_id, sub, now, dropped):
        if self.inner == "threshold":
            pkt = sub.q.popleft()
            sub.bytes -= pkt.size
            self.backlog -= pkt.size
            if now - pkt.enqueued_at > self.threshold and pkt.ecn in (ECT0, ECT1):
                _mark(pkt)
                self.marks += 1
            return pkt
        # Per-flow CoDel shares our deques: mirror the sub-queue into the
        # flow's CoDel instance state by running its decision on the head.
        codel = self._codels[flow_id]
        codel._q = sub.q
        codel.backlog = sub.bytes
        pkt, inner_dropped = codel.dequeue(now)
        dropped.extend(inner_dropped)
        sub.bytes = codel.backlog
        removed = (pkt.size if pkt is not None else 0) + sum(
            p.size for p in inner_dropped
        )
        self.backlog -= removed
        self.marks = sum(c.marks for c in self._codels.values())
        self.drops += len(inner_dropped)
        return pkt


def dualpi2_classify(ecn):
    """L4S identifier: ECT(1) and CE go to the low-latency queue."""
    return "L" if ecn == ECT1 or ecn == CE else "C"


def dualpi2_pi_update(p_prime, qdelay_ns, prev_qdelay_ns, cfg):
    """One PI-controller step; returns the new clamped base probability."""
    qd = qdelay_ns / SEC
    prev = prev_qdelay_ns / SEC
    target = cfg.pi_target_ns / SEC
    t_update = cfg.t_update_ns / SEC
    p = p_prime + t_update * (cfg.alpha_gain * (qd - target) + cfg.beta_gain * (qd - prev))
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def dualpi2_probabilities(p_prime, k):
    """Coupling: classic queue sees p'^2, L4S queue sees min(k*p', 1)."""
    if not 0.0 <= p_prime <= 1.0:
        raise ValueError("p_prime must be in [0, 1]")
    if k <= 0:
        raise ValueError("coupling factor must be positive")
    p_classic = p_prime * p_prime
    p_l4s = k * p_prime
    if p_l4s > 1.0:
        p_l4s = 1.0
    return p_classic, p_l4s


class DualPi2Config:
    __slots__ = (
        "pi_target_ns",
        "step_thresh_ns",
        "t_update_ns",
        "alpha_gain",
        "beta_gain",
        "coupling",
        "tshift_ns",
    )

    def __init__(
        self,
        pi_target_ns=5 * MS,
        step_thresh_ns=1 * MS,
        t_update_ns=16 * MS,
        alpha_gain=0.16,
        beta_gain=3.2,
        coupling=2.0,
        tshift_ns=40 * MS,
    ):
        if step_thresh_ns >= pi_target_ns:
            raise ValueError("step threshold must be below the PI target")
        self.pi_target_ns = pi_target_ns
        self.step_thresh_ns = step_thresh_ns
        self.t_update_ns = t_update_ns
        self.alpha_gain = alpha_gain
        self.beta_gain = beta_gain
        self.coupling = coupling
        self.tshift_ns = tshift_ns


class DualPi2Queue:
    """Coupled dual-queue AQM: L queue (ECT1/CE) with a 1 ms step marking
    threshold plus coupled probabilistic marking, C queue under PI^2
    (squared) marking/dropping.  Mark/drop decisions use deterministic
    probability accumulators (recur counters) rather than RNG draws.

    Scheduling is a time-shifted FIFO: L has priority until the C head has
    waited tshift longer than the L head.  The byte budget is shared;
    overflow tail-drops the arriving packet.
    """

    kind = "dualpi2"

    def __init__(self, limit_bytes, cfg=None):
        if limit_bytes <= 0:
            raise ValueError("buffer limit must be positive")
        self.limit = limit_bytes
        self.cfg = cfg if cfg is not None else DualPi2Config()
        self.backlog = 0
        self.marks = 0
        self.drops = 0
        self.p_prime = 0.0
        self._prev_qdelay = 0
        self._lq = deque()
        self._cq = deque()
        self._accum_l = 0.0
        self._accum_c = 0.0

    def __len__(self):
        return len(self._lq) + len(self._cq)

    def enqueue(self, pkt, now):
        if self.backlog + pkt.size > self.limit:
            self.drops += 1
            return False
        pkt.enqueued_at = now
        if dualpi2_classify(pkt.ecn) == "L":
            self._lq.append(pkt)
        else:
            self._cq.append(pkt)
        self.backlog += pkt.size
        return True

    def pi_update(self, now):
        """Periodic (t_update) PI step driven off the head sojourn times."""
        qdelay = 0
        if self._lq:
            qdelay = now - self._lq[0].enqueued_at
        if self._cq:
            c_delay = now - self._cq[0].enqueued_at
            if c_delay > qdelay:
                qdelay = c_delay
        self.p_prime = dualpi2_pi_update(
            self.p_prime, qdelay, self._prev_qdelay, self.cfg
        )
        self._prev_qdelay = qdelay

    def _serve_c_first(self, now):
        # Time-shifted FIFO: L has priority until the C head has waited
        # tshift longer than the L head.
        if not self._cq:
            return False
        if not self._lq:
            return True
        l_sojourn = now - self._lq[0].enqueued_at
        c_wait = now - self._cq[0].enqueued_at
        return c_wait >= l_sojourn + self.cfg.tshift_ns

    def dequeue(self, now):
        dropped = []
        _, p_l4s = dualpi2_probabilities(self.p_prime, self.cfg.coupling)
        p_classic = self.p_prime * self.p_prime
        while self._lq or self._cq:
            if self._serve_c_first(now):
                pkt = self._cq.popleft()
                self.backlog -= pkt.size
                self._accum_c += p_classic
                if self._accum_c >= 1.0:
                    self._accum_c -= 1.0
                    if pkt.ecn == ECT0:
                        _mark(pkt)
                        self.marks += 1
                    else:
                        dropped.append(pkt)
                        self.drops += 1
                        continue
                return pkt, dropped
            if self._lq:
                pkt = self._lq.popleft()
                self.backlog -= pkt.size
                mark = now - pkt.enqueued_at > self.cfg.step_thresh_ns
                self._accum_l += p_l4s
                if self._accum_l >= 1.0:
                    self._accum_l -= 1.0
                    mark = True
                if mark and pkt.ecn == ECT1:
                    _mark(pkt)
                    self.marks += 1
                return pkt, dropped
        return None, dropped


def build_queue(kind, limit_bytes, params):
    """Factory mapping a queue-kind name and parameter dict to an instance."""
    if kind == "fifo":
        return FifoQueue(limit_bytes)
    if kind == "fifo-ecn":
        return FifoEcnQueue(limit_bytes, params.get("ecn_threshold_ns", 5 * MS))
    if kind == "codel":
        return CodelQueue(
            limit_bytes,
            params.get("target_ns", 5 * MS),
            params.get("interval_ns", 100 * MS),
        )
    if kind == "fq":
        return FqQueue(
            limit_bytes,
            inner="threshold",
            ecn_threshold_ns=params.get("ecn_threshold_ns", 5 * MS),
        )
    if kind == "fq-codel":
        return FqQueue(
            limit_bytes,
            inner="codel",
            target_ns=params.get("target_ns", 5 * MS),
            interval_ns=params.get("interval_ns", 100 * MS),
        )
    if kind == "dualpi2":
        cfg = DualPi2Config(
            pi_target_ns=params.get("pi_target_ns", 5 * MS),
            step_thresh_ns=params.get("step_thresh_ns", 1 * MS),
            t_update_ns=params.get("t_update_ns", 16 * MS),
            alpha_gain=params.get("alpha_gain", 0.16),
            beta_gain=params.get("beta_gain", 3.2),
            coupling=params.get("coupling", 2.0),
            tshift_ns=params.get("tshift_ns", 40 * MS),
        )
        return DualPi2Queue(limit_bytes, cfg)
    raise ValueError(f"unknown queue kind {kind!r}")
