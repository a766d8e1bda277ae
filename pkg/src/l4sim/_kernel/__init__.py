"""Simulation kernel: event loop, congestion controllers, queue disciplines.

The same source is built twice: here as pure Python, and cythonized as
l4sim._ckernel.  Import it through l4sim.backend rather than directly.
"""

from . import aqm, cc, des, sim  # noqa: F401

BACKEND = "pure" if des.__file__.endswith(".py") else "compiled"
