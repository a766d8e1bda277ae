"""Sender-side congestion controllers behind one ack/loss/mark contract.

Variants: Reno (+classic ECN), Cubic (+classic ECN), Prague (scalable
DCTCP-style response, optional classic-queue fallback detector), and
simplified BBRv1/BBRv2 models (v2 with classic-ECN or AccECN-L4S response).

The owning sender drives the contract:
  on_ack(acked_pkts, rtt_ns, now)      every ack
  on_round_end(acked, marked, dur, now) once per RTT round (AccECN counts)
  on_congestion(now, inflight)          at most once per round (loss or ECE)
  on_rto(now)                           retransmission timeout
Windows are fractional packets internally and floored at 2 when applied.
"""

import math

from .des import ECT0, ECT1, MS, NOT_ECT, SEC

MSS = 1500
MIN_CWND = 2.0
INITIAL_WINDOW = 10.0

UNDECIDED = "undecided"
L4S_QUEUE = "l4s-queue"
CLASSIC_QUEUE = "classic-queue"


def prague_alpha_update(alpha, frac_marked, gain=1.0 / 16):
    """EWMA of the per-round marked fraction: (1-g)*alpha + g*frac."""
    for name, v in (("alpha", alpha), ("frac_marked", frac_marked), ("gain", gain)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    return (1.0 - gain) * alpha + gain * frac_marked


def prague_reduce(cwnd, alpha):
    """Proportional multiplicative decrease, cwnd * (1 - alpha/2), floor 2."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return max(cwnd * (1.0 - alpha / 2.0), MIN_CWND)


def cubic_window(t_seconds, w_max, k_seconds, c=0.4):
    """Cubic growth function C*(t-K)^3 + w_max, in packets."""
    if t_seconds < 0:
        raise ValueError("time since epoch must be >= 0")
    return c * (t_seconds - k_seconds) ** 3 + w_max


class FallbackDetector:
    """Classifies the bottleneck from RTT variation after the first CE mark.

    Collects RTT samples for `eval_rounds` rounds once marks have been seen;
    a (max - min) spread above the threshold indicates a classic single
    queue (deep sawtooth), a small spread an L4S-style shallow queue.
    Re-evaluates every period, with hysteresis: leaving the classic
    classification needs `calm_periods` consecutive windows below half the
    threshold, since the fallback response itself produces a sawtooth that
    hovers near it.
    """

    def __init__(self, var_thresh_ns=2 * MS, eval_rounds=8, calm_periods=4):
        self.var_thresh = var_thresh_ns
        self.eval_rounds = eval_rounds
        self.calm_periods = calm_periods
        self.classification = UNDECIDED
        self.active = False
        self._rounds = 0
        self._calm = 0
        self._rtt_min = None
        self._rtt_max = None

    def on_mark(self):
        self.active = True

    def on_rtt(self, rtt_ns):
        if not self.active:
            return
        if self._rtt_min is None or rtt_ns < self._rtt_min:
            self._rtt_min = rtt_ns
        if self._rtt_max is None or rtt_ns > self._rtt_max:
            self._rtt_max = rtt_ns

    def on_round_end(self):
        """Returns the (possibly updated) classification."""
        if not self.active:
            return self.classification
        self._rounds += 1
        if self._rounds >= self.eval_rounds and self._rtt_min is not None:
            spread = self._rtt_max - self._rtt_min
            if spread > self.var_thresh:
                self.classification = CLASSIC_QUEUE
                self._calm = 0
            elif self.classification == CLASSIC_QUEUE:
                self._calm = self._calm + 1 if 2 * spread < self.var_thresh else 0
                if self._calm >= self.calm_periods:
                    self.classification = L4S_QUEUE
                    self._calm = 0
            else:
                self.classification = L4S_QUEUE
            self._rounds = 0
            self._rtt_min = None
            self._rtt_max = None
        return self.classification


class Controller:
    """Shared window bookkeeping: slow start + 1/cwnd per-ack growth."""

    ect = NOT_ECT
    uses_pacing = False
    wants_classic_ece = False
    # Latched-ECE response granularity: per RTT round (Reno-style immediate
    # halving while ECE persists) vs per congestion window (CWR state held
    # until the cut flight is acked, as in the cubic state machine).
    ece_per_round = False

    def __init__(self):
        self.cwnd = INITIAL_WINDOW
        self.ssthresh = float("inf")
        self.pacing_rate = 0.0

    def window_pkts(self):
        w = self.cwnd
        return 2 if w < MIN_CWND else int(w)

    def _grow(self, acked_pkts):
        if self.cwnd < self.ssthresh:
            self.cwnd += acked_pkts
        else:
            self.cwnd += acked_pkts / self.cwnd

    def on_ack(self, acked_pkts, rtt_ns, now):
        self._grow(acked_pkts)

    def on_round_end(self, acked, marked, dur_ns, now):
        pass

    def on_congestion(self, now, inflight):
        self.ssthresh = max(self.cwnd / 2.0, MIN_CWND)
        self.cwnd = self.ssthresh

    def on_rto(self, now):
        self.ssthresh = max(self.cwnd / 2.0, MIN_CWND)
        self.cwnd = MIN_CWND


class Reno(Controller):
    ece_per_round = True

    def __init__(self, ecn=False):
        super().__init__()
        if ecn:
            self.ect = ECT0
            self.wants_classic_ece = True


class Cubic(Controller):
    """Cubic with the TCP-friendly region; beta=0.7, C=0.4 pkts/s^3."""

    C = 0.4
    BETA = 0.7

    def __init__(self, ecn=False):
        super().__init__()
        if ecn:
            self.ect = ECT0
            self.wants_classic_ece = True
        self.w_max = 0.0
        self.k = 0.0
        self.epoch_start = None
        self._epoch_cwnd = 0.0

    def on_ack(self, acked_pkts, rtt_ns, now):
        if self.cwnd < self.ssthresh:
            self.cwnd += acked_pkts
            return
        if self.epoch_start is None:
            self.epoch_start = now
            self.w_max = max(self.w_max, self.cwnd)
            self.k = ((self.w_max * (1.0 - self.BETA)) / self.C) ** (1.0 / 3.0)
            self._epoch_cwnd = self.cwnd
        t = (now - self.epoch_start) / SEC
        rtt_s = rtt_ns / SEC if rtt_ns > 0 else 0.01
        target = cubic_window(t + rtt_s, self.w_max, self.k, self.C)
        # Reno-equivalent estimate keeps Cubic TCP-friendly at small scale.
        w_est = self._epoch_cwnd * self.BETA + (
            3.0 * (1.0 - self.BETA) / (1.0 + self.BETA)
        ) * (t / rtt_s)
        if w_est > target:
            target = w_est
        if target > self.cwnd:
            self.cwnd += (target - self.cwnd) / self.cwnd * acked_pkts
        else:
            self.cwnd += acked_pkts * 0.01 / self.cwnd

    def on_congestion(self, now, inflight):
        # Fast convergence: a loss before regaining the previous peak means
        # a new flow is taking bandwidth, so release extra room.
        self._epoch_cwnd = self.cwnd
        if self.cwnd < self.w_max:
            self.w_max = self.cwnd * (2.0 - self.BETA) / 2.0
        else:
            self.w_max = self.cwnd
        self.cwnd = max(self.cwnd * self.BETA, MIN_CWND)
        self.ssthresh = self.cwnd
        self.k = ((self.w_max * (1.0 - self.BETA)) / self.C) ** (1.0 / 3.0)
        self.epoch_start = now

    def on_rto(self, now):
        super().on_rto(now)
        self.epoch_start = None


class Prague(Controller):
    """Scalable (DCTCP-style) response: per-round alpha EWMA of the marked
    fraction, cwnd *= (1 - alpha/2) on marked rounds, Reno halving on loss.

    With fallback enabled, an RTT-variation detector may reclassify the
    bottleneck as a classic single queue, after which marked rounds get the
    classic halving instead.  The ECT(1) codepoint is kept in either mode.
    """

    ect = ECT1
    uses_pacing = True
    GAIN = 1.0 / 16
    RTT_VIRT_NS = 25 * MS
    PACING_GAIN_CA = 1.2
    PACING_GAIN_SS = 2.0

    def __init__(self, fallback=False, var_thresh_ns=2 * MS, eval_rounds=8,
                 force_classify=None):
        super().__init__()
        self.alpha = 1.0
        self.detector = (
            FallbackDetector(var_thresh_ns, eval_rounds) if fallback else None
        )
        if force_classify == "classic":
            force_classify = CLASSIC_QUEUE
        elif force_classify == "l4s":
            force_classify = L4S_QUEUE
        if force_classify not in (None, CLASSIC_QUEUE, L4S_QUEUE):
            raise ValueError(f"unknown classification {force_classify!r}")
        self.force_classify = force_classify
        self._seen_mark = False
        self._cut_cooldown = 0
        # Free-run guess until the first RTT sample fixes the pacer.
        self.pacing_rate = 100e6

    @property
    def mode(self):
        if self.force_classify is not None:
            return (
                "classic-fallback"
                if self.force_classify == CLASSIC_QUEUE
                else "scalable"
            )
        if self.detector is not None and self.detector.classification == CLASSIC_QUEUE:
            return "classic-fallback"
        return "scalable"

    def on_ack(self, acked_pkts, rtt_ns, now):
        if self.detector is not None:
            self.detector.on_rtt(rtt_ns)
        # Pacing spreads each window over the measured RTT so bursts do not
        # slam a full or shallow queue; the gain keeps the pipe ack-clocked.
        if rtt_ns > 0:
            gain = (
                self.PACING_GAIN_SS
                if self.cwnd < self.ssthresh
                else self.PACING_GAIN_CA
            )
            self.pacing_rate = gain * self.cwnd * MSS * 8 * SEC / rtt_ns
        # RTT-independent additive increase: below the virtual RTT the
        # congestion-avoidance growth is scaled so the rate ramp matches a
        # flow at RTT_VIRT, keeping short-RTT scalable flows from crowding
        # out classic traffic.  Only applies to marked scalable operation;
        # slow start, loss-driven paths, and classic fallback keep the
        # unscaled response.
        if (
            self._seen_mark
            and self.mode == "scalable"
            and self.cwnd >= self.ssthresh
            and 0 < rtt_ns < self.RTT_VIRT_NS
        ):
            acked_pkts = acked_pkts * rtt_ns / self.RTT_VIRT_NS
        self._grow(acked_pkts)

    def on_round_end(self, acked, marked, dur_ns, now):
        if acked <= 0:
            return
        if self._cut_cooldown:
            self._cut_cooldown -= 1
        frac = marked / acked
        if frac > 1.0:
            frac = 1.0
        self.alpha = prague_alpha_update(self.alpha, frac, self.GAIN)
        if marked:
            if not self._seen_mark:
                self._seen_mark = True
                if self.detector is not None:
                    self.detector.on_mark()
            if self.mode == "classic-fallback":
                # One halving per congestion episode: the round after a cut
                # still sees marks on packets queued before it took effect.
                if self._cut_cooldown == 0:
                    self.cwnd = max(self.cwnd / 2.0, MIN_CWND)
                    self._cut_cooldown = 2
            else:
                self.cwnd = prague_reduce(self.cwnd, self.alpha)
            self.ssthresh = min(self.ssthresh, self.cwnd)
        if self.detector is not None:
            self.detector.on_round_end()

    def on_congestion(self, now, inflight):
        # Loss path: Reno friendliness in every mode.
        self.ssthresh = max(self.cwnd / 2.0, MIN_CWND)
        self.cwnd = self.ssthresh


STARTUP = "startup"
DRAIN = "drain"
PROBE_BW = "probe-bw"
PROBE_RTT = "probe-rtt"

_PROBE_GAINS = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)


class Bbr(Controller):
    """Model-based BBR: windowed max-bandwidth / min-RTT filters, the
    standard gain cycle, and (v2) inflight_hi loss/ECN bounds.

    Deliberately simplified: bandwidth samples are per-round, phase advances
    are round-based, and startup/drain use the standard 2/ln(2) gain.  v1
    ignores both loss and ECN; v2 cuts inflight_hi on loss rounds and, with
    ECN enabled, on marked rounds via an alpha EWMA of the mark fraction.
    """

    uses_pacing = True
    STARTUP_GAIN = 2.885
    BW_WINDOW_ROUNDS = 10
    MINRTT_WINDOW_NS = 10 * SEC
    PROBE_RTT_DURATION_NS = 200 * MS
    LOSS_BETA = 0.7
    ECN_GAIN = 1.0 / 16
    ECN_FACTOR = 1.0 / 3
    ECN_THRESH = 0.5

    def __init__(self, version=2, ecn_mode="off"):
        super().__init__()
        if version not in (1, 2):
            raise ValueError("BBR version must be 1 or 2")
        if version == 1 and ecn_mode != "off":
            raise ValueError("BBRv1 does not support ECN")
        self.version = version
        self.ecn_mode = ecn_mode
        if ecn_mode == "classic":
            self.ect = ECT0
        elif ecn_mode == "accecn-l4s":
            self.ect = ECT1
        elif ecn_mode != "off":
            raise ValueError(f"unknown ECN mode {ecn_mode!r}")
        self.mode = STARTUP
        self.pacing_gain = self.STARTUP_GAIN
        self.cwnd_gain = self.STARTUP_GAIN
        self.btlbw = 0.0
        self.min_rtt = None
        self._minrtt_stamp = 0
        self._probe_rtt_done = 0
        self._bw_samples = []
        self._round_idx = 0
        self._full_bw = 0.0
        self._full_bw_rounds = 0
        self._cycle_idx = 0
        self.inflight_hi = float("inf")
        self.inflight_lo = 0.0
        self.ecn_alpha = 1.0
        self._skip_bw_rounds = 0
        # Until the first RTT sample the pacer free-runs at an access-scale
        # guess; the first round corrects it.
        self.pacing_rate = 100e6

    def bdp_pkts(self):
        if self.btlbw <= 0 or self.min_rtt is None:
            return INITIAL_WINDOW
        return self.btlbw * (self.min_rtt / SEC) / (8.0 * MSS)

    def window_pkts(self):
        if self.mode == PROBE_RTT:
            return 4
        w = self.cwnd_gain * self.bdp_pkts()
        if self.version == 2 and w > self.inflight_hi:
            w = self.inflight_hi
        return 4 if w < 4 else int(w)

    def on_ack(self, acked_pkts, rtt_ns, now):
        if self.min_rtt is None or rtt_ns <= self.min_rtt:
            self.min_rtt = rtt_ns
            self._minrtt_stamp = now

    def _update_btlbw(self, bw_sample):
        self._bw_samples.append((self._round_idx, bw_sample))
        cutoff = self._round_idx - self.BW_WINDOW_ROUNDS
        self._bw_samples = [(r, b) for r, b in self._bw_samples if r > cutoff]
        self.btlbw = max(b for _, b in self._bw_samples)

    def on_round_end(self, acked, marked, dur_ns, now):
        if acked <= 0 or dur_ns <= 0:
            return
        self._round_idx += 1
        if self.mode == PROBE_RTT:
            pass  # cwnd-limited; the sample would poison the max filter
        elif self._skip_bw_rounds > 0:
            self._skip_bw_rounds -= 1
        else:
            self._update_btlbw(acked * MSS * 8 * SEC / dur_ns)

        if self.version == 2 and self.ecn_mode != "off":
            frac = min(marked / acked, 1.0)
            self.ecn_alpha += self.ECN_GAIN * (frac - self.ecn_alpha)
            trigger = (
                frac > self.ECN_THRESH
                if self.ecn_mode == "classic"
                else marked > 0
            )
            if trigger:
                base = self.inflight_hi
                if base == float("inf"):
                    base = self.cwnd_gain * self.bdp_pkts()
                self.inflight_hi = max(base * (1.0 - self.ecn_alpha * self.ECN_FACTOR), 4.0)

        if self.mode == STARTUP:
            if self.btlbw > self._full_bw * 1.25:
                self._full_bw = self.btlbw
                self._full_bw_rounds = 0
            else:
                self._full_bw_rounds += 1
                if self._full_bw_rounds >= 3:
                    self.mode = DRAIN
                    self.pacing_gain = 1.0 / self.STARTUP_GAIN
                    self.cwnd_gain = 2.0
        elif self.mode == DRAIN:
            self.mode = PROBE_BW
            self._cycle_idx = 0
            self.pacing_gain = _PROBE_GAINS[0]
        elif self.mode == PROBE_BW:
            self._cycle_idx = (self._cycle_idx + 1) % len(_PROBE_GAINS)
            self.pacing_gain = _PROBE_GAINS[self._cycle_idx]
            if (
                self.version == 2
                and self.inflight_hi != float("inf")
                and self.pacing_gain > 1.0
            ):
                # Probe-up regrowth; sized so the ECN cut/growth balance
                # lands near rate parity against a scalable competitor.
                self.inflight_hi += 1.0
        elif self.mode == PROBE_RTT:
            if now >= self._probe_rtt_done:
                self.mode = PROBE_BW
                self._minrtt_stamp = now
                self._cycle_idx = 0
                self.pacing_gain = _PROBE_GAINS[0]
                self._skip_bw_rounds = 1  # exit round is still drained

        if (
            self.mode not in (PROBE_RTT, STARTUP)
            and now - self._minrtt_stamp > self.MINRTT_WINDOW_NS
        ):
            self.mode = PROBE_RTT
            self._probe_rtt_done = now + self.PROBE_RTT_DURATION_NS
            self.min_rtt = None

        if self.btlbw > 0:
            self.pacing_rate = self.pacing_gain * self.btlbw

    def on_congestion(self, now, inflight):
        if self.version == 1:
            return
        base = min(self.inflight_hi, max(inflight, self.window_pkts()))
        self.inflight_hi = max(base * self.LOSS_BETA, 4.0)

    def on_rto(self, now):
        if self.version == 1:
            return
        self.inflight_hi = max(self.inflight_hi * self.LOSS_BETA, 4.0)


def build_controller(name, ecn_mode="off", fallback=False, force_classify=None,
                     fallback_var_thresh_ns=2 * MS, fallback_eval_rounds=8):
    """Instantiate a controller from scenario-config names."""
    if name == "reno":
        return Reno(ecn=ecn_mode == "classic")
    if name == "cubic":
        return Cubic(ecn=ecn_mode == "classic")
    if name == "prague":
        return Prague(
            fallback=fallback,
            var_thresh_ns=fallback_var_thresh_ns,
            eval_rounds=fallback_eval_rounds,
            force_classify=force_classify,
        )
    if name == "bbrv1":
        return Bbr(version=1)
    if name == "bbrv2":
        return Bbr(version=2, ecn_mode=ecn_mode)
    raise ValueError(f"unknown congestion controller {name!r}")
