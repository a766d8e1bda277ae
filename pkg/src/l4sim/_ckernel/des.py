"""Deterministic discrete-event core: virtual clock, event heap, links, RNG.

Time is integer nanoseconds throughout; all configured delays convert exactly
and the clock cannot drift.  Events that share a timestamp dispatch in the
order they were scheduled (global ordinal tie-breaker), so a run is a pure
function of (configuration, seed).
"""

import heapq
import random

NS = 1
US = 1_000
MS = 1_000_000
SEC = 1_000_000_000

# ECN codepoints, numbered as in the IP header ECN field.
NOT_ECT = 0
ECT1 = 1
ECT0 = 2
CE = 3


class SchedulingInPast(Exception):
    """Raised when an event is scheduled before the current clock (logic bug)."""


class SeededRng:
    """Reproducible randomness: identical seed, identical draw sequence."""

    __slots__ = ("seed", "_rng")

    def __init__(self, seed):
        self.seed = seed
        self._rng = random.Random(seed)

    def random(self):
        return self._rng.random()

    def jitter_ns(self, bound_ns):
        """Uniform integer jitter in [0, bound_ns)."""
        if bound_ns <= 0:
            return 0
        return self._rng.randrange(bound_ns)


class EventLoop:
    """Binary-heap event queue with a monotonic virtual clock."""

    __slots__ = ("now", "_heap", "_ordinal", "dispatched")

    def __init__(self):
        self.now = 0
        self._heap = []
        self._ordinal = 0
        self.dispatched = 0

    def schedule(self, at, fn, arg=None):
        if at < self.now:
            raise SchedulingInPast(f"event at {at} ns scheduled at clock {self.now} ns")
        self._ordinal += 1
        heapq.heappush(self._heap, (at, self._ordinal, fn, arg))

    def run_until(self, deadline):
        """Dispatch every event with timestamp <= deadline.

        The clock advances to the horizon once any event has run; an empty
        queue returns immediately with the clock untouched.
        """
        heap = self._heap
        pop = heapq.heappop
        ran = False
        while heap and heap[0][0] <= deadline:
            at, _, fn, arg = pop(heap)
            self.now = at
            self.dispatched += 1
            ran = True
            if arg is None:
                fn()
            else:
                fn(arg)
        if ran and deadline > self.now:
            self.now = deadline


class Packet:
    __slots__ = (
        "flow_id",
        "seq",
        "size",
        "ecn",
        "sent_at",
        "enqueued_at",
        "cwr",
    )

    def __init__(self, flow_id, seq, size, ecn, sent_at, cwr=False):
        self.flow_id = flow_id
        self.seq = seq
        self.size = size
        self.ecn = ecn
        self.sent_at = sent_at
        self.enqueued_at = 0
        self.cwr = cwr


class Link:
    """One-at-a-time serialization at `rate` followed by fixed propagation."""

    __slots__ = ("rate", "prop", "busy_until")

    def __init__(self, rate_bps, prop_ns=0):
        if rate_bps <= 0:
            raise ValueError("link rate must be positive")
        self.rate = rate_bps
        self.prop = prop_ns
        self.busy_until = 0

    def serialization_ns(self, size_bytes):
        return (size_bytes * 8 * SEC) // self.rate

    def transmit(self, now, size_bytes):
        """Return the arrival time at the far end; advances busy_until.

        FIFO by construction: each transmit starts no earlier than the
        previous one finished, so per-link order equals submission order.
        """
        start = now if now > self.busy_until else self.busy_until
        self.busy_until = start + (size_bytes * 8 * SEC) // self.rate
        return self.busy_until + self.prop
