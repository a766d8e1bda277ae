"""l4sim: discrete-event simulator of TCP Prague coexistence at partial
L4S deployments, with an experiment harness reproducing throughput-share
and queuing-delay matrices across six bottleneck queue disciplines."""

from .backend import backend_name, kernel  # noqa: F401

__version__ = "0.1.0"
