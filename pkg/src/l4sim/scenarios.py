"""Scenario model: one cell of the coexistence experiment matrix.

Defaults follow the access-link setting under study: 100 Mb/s bottleneck,
10 ms base RTT, 60 s bulk transfers, buffers in BDP multiples, and the six
queue disciplines with their standard parameters (5 ms ECN threshold /
CoDel target, DualPI2 with 5 ms PI target and 1 ms L4S step threshold).
"""

from dataclasses import dataclass, field, replace

MS = 1_000_000
SEC = 1_000_000_000

QUEUE_KINDS = ("fifo", "fifo-ecn", "codel", "fq", "fq-codel", "dualpi2")
CC_NAMES = ("reno", "cubic", "prague", "bbrv1", "bbrv2")
ECN_MODES = ("off", "classic", "accecn-l4s")
BUFFER_MULTIPLES = (0.5, 1, 2, 4, 8)


class ScenarioError(ValueError):
    """Invalid scenario or matrix configuration."""


@dataclass(frozen=True)
class QueueConfig:
    kind: str = "fifo"
    ecn_threshold_ms: float = 5.0
    codel_target_ms: float = 5.0
    codel_interval_ms: float = 100.0
    pi_target_ms: float = 5.0
    step_thresh_ms: float = 1.0
    t_update_ms: float = 16.0
    alpha_gain: float = 0.16
    beta_gain: float = 3.2
    coupling: float = 2.0

    def validate(self):
        if self.kind not in QUEUE_KINDS:
            raise ScenarioError(f"unknown queue kind {self.kind!r}")
        if self.step_thresh_ms >= self.pi_target_ms:
            raise ScenarioError("DualPI2 step threshold must be below PI target")

    def kernel_params(self):
        if self.kind in ("fifo-ecn", "fq"):
            return {"ecn_threshold_ns": int(self.ecn_threshold_ms * MS)}
        if self.kind in ("codel", "fq-codel"):
            return {
                "target_ns": int(self.codel_target_ms * MS),
                "interval_ns": int(self.codel_interval_ms * MS),
            }
        if self.kind == "dualpi2":
            return {
                "pi_target_ns": int(self.pi_target_ms * MS),
                "step_thresh_ns": int(self.step_thresh_ms * MS),
                "t_update_ns": int(self.t_update_ms * MS),
                "alpha_gain": self.alpha_gain,
                "beta_gain": self.beta_gain,
                "coupling": self.coupling,
            }
        return {}


@dataclass(frozen=True)
class FlowSpec:
    cc: str = "prague"
    ecn: str = "off"
    fallback: bool = False
    force_classify: str | None = None
    start_at_s: float = 0.0

    def validate(self):
        if self.cc not in CC_NAMES:
            raise ScenarioError(f"unknown congestion controller {self.cc!r}")
        if self.ecn not in ECN_MODES:
            raise ScenarioError(f"unknown ECN mode {self.ecn!r}")
        if self.fallback and self.cc != "prague":
            raise ScenarioError("ECN fallback is a Prague-only switch")
        if self.ecn == "accecn-l4s" and self.cc not in ("prague", "bbrv2"):
            raise ScenarioError("AccECN-L4S requires Prague or BBRv2")
        if self.cc == "bbrv1" and self.ecn != "off":
            raise ScenarioError("BBRv1 does not support ECN")

    def label(self):
        name = self.cc
        if self.cc == "prague":
            return name + ("-fb" if self.fallback else "")
        if self.ecn == "classic":
            return name + "-ecn"
        if self.ecn == "accecn-l4s":
            return name + "-accecn"
        return name


@dataclass(frozen=True)
class Scenario:
    queue: QueueConfig = field(default_factory=QueueConfig)
    buffer_bdp: float = 1.0
    flow_a: FlowSpec = field(default_factory=FlowSpec)
    flow_b: FlowSpec = field(default_factory=lambda: FlowSpec(cc="cubic"))
    bottleneck_mbps: float = 100.0
    base_rtt_ms: float = 10.0
    duration_s: float = 60.0
    trials: int = 10

    def validate(self):
        self.queue.validate()
        self.flow_a.validate()
        self.flow_b.validate()
        if self.buffer_bdp <= 0:
            raise ScenarioError("buffer multiple must be positive")
        if self.duration_s <= 0:
            raise ScenarioError("duration must be positive")
        if self.trials < 1:
            raise ScenarioError("at least one trial required")

    @property
    def buffer_bytes(self):
        """BDP-multiple buffer in bytes: m * rate * base_rtt / 8."""
        return int(
            self.buffer_bdp * self.bottleneck_mbps * 1e6 * self.base_rtt_ms * 1e-3 / 8
        )

    def scenario_id(self):
        return "_".join(
            [
                self.queue.kind,
                f"{self.buffer_bdp:g}bdp",
                self.flow_a.label(),
                self.flow_b.label(),
            ]
        )

    def kernel_cfg(self, single_flow=False, ts_period_s=0.0):
        """Plain-dict trial config consumed by the simulation kernel."""
        self.validate()
        flows = [self.flow_a] if single_flow else [self.flow_a, self.flow_b]
        return {
            "rate": int(self.bottleneck_mbps * 1e6),
            "base_rtt": int(self.base_rtt_ms * MS),
            "buffer": self.buffer_bytes,
            "duration": int(self.duration_s * SEC),
            "queue": {"kind": self.queue.kind, **self.queue.kernel_params()},
            "ts_period": int(ts_period_s * SEC),
            "flows": [
                {
                    "cc": f.cc,
                    "ecn": f.ecn,
                    "fallback": f.fallback,
                    "force_classify": f.force_classify,
                    "start_at": int(f.start_at_s * SEC),
                }
                for f in flows
            ],
        }

    def with_(self, **kw):
        return replace(self, **kw)
