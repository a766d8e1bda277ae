"""Benchmark the pure-Python kernel against the compiled (Cython) build.

Runs the same seeded trials on both backends, reports wall time per trial
and the speedup, and verifies the outputs are bit-identical.

Usage: python3 benchmarks/bench_backends.py [--duration 20] [--repeats 3]
"""

import argparse
import time

from l4sim.backend import available_backends, get_kernel
from l4sim.scenarios import FlowSpec, QueueConfig, Scenario

CASES = [
    Scenario(
        queue=QueueConfig(kind="fifo"),
        buffer_bdp=2.0,
        flow_a=FlowSpec(cc="prague", ecn="accecn-l4s"),
        flow_b=FlowSpec(cc="cubic"),
    ),
    Scenario(
        queue=QueueConfig(kind="dualpi2"),
        buffer_bdp=1.0,
        flow_a=FlowSpec(cc="prague", ecn="accecn-l4s"),
        flow_b=FlowSpec(cc="bbrv2", ecn="accecn-l4s"),
    ),
    Scenario(
        queue=QueueConfig(kind="fq-codel"),
        buffer_bdp=4.0,
        flow_a=FlowSpec(cc="prague", ecn="accecn-l4s", fallback=True),
        flow_b=FlowSpec(cc="cubic", ecn="classic"),
    ),
]


def bench(kernel_mod, cfg, seed, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = kernel_mod.sim.run_trial(cfg, seed)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--duration", type=float, default=20.0,
                        help="simulated seconds per trial")
    parser.add_argument("--repeats", type=int, default=3,
                        help="repeats per case (best time wins)")
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        parser.error("compiled backend not built; run pip install -e . first")

    kernels = {name: get_kernel(name) for name in ("pure", "compiled")}
    print(f"{'scenario':<42} {'pure':>8} {'compiled':>9} {'speedup':>8}  match")
    speedups = []
    for scenario in CASES:
        scenario = scenario.with_(duration_s=args.duration)
        cfg = scenario.kernel_cfg()
        times, outputs = {}, {}
        for name, mod in kernels.items():
            times[name], outputs[name] = bench(mod, cfg, args.seed, args.repeats)
        match = outputs["pure"] == outputs["compiled"]
        speedup = times["pure"] / times["compiled"]
        speedups.append(speedup)
        print(
            f"{scenario.scenario_id():<42} {times['pure']:>7.2f}s"
            f" {times['compiled']:>8.2f}s {speedup:>7.2f}x  {match}"
        )
        if not match:
            raise SystemExit("backend outputs diverged; this is a bug")
    mean = sum(speedups) / len(speedups)
    print(f"\nmean speedup: {mean:.2f}x over {len(CASES)} scenarios "
          f"({args.duration:g} simulated seconds each)")


if __name__ == "__main__":
    main()
