"""Kernel backend selection: compiled Cython core with pure-Python fallback.

The environment variable L4SIM_BACKEND forces a choice:
  L4SIM_BACKEND=pure      always use the pure-Python kernel
  L4SIM_BACKEND=compiled  require the compiled kernel (ImportError if absent)
Unset, the compiled kernel is used when available.  Both are built from the
same source and produce bit-identical results; compiled is just faster.
"""

import os

_forced = os.environ.get("L4SIM_BACKEND", "").strip().lower()

if _forced == "pure":
    from l4sim import _kernel as kernel
elif _forced == "compiled":
    from l4sim import _ckernel as kernel  # type: ignore[no-redef]
else:
    try:
        from l4sim import _ckernel as kernel  # type: ignore[no-redef]
    except ImportError:
        from l4sim import _kernel as kernel


def backend_name():
    return kernel.BACKEND


def available_backends():
    names = ["pure"]
    try:
        from l4sim import _ckernel  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names


def get_kernel(name=None):
    """Explicitly fetch a kernel package by backend name."""
    if name in (None, ""):
        return kernel
    if name == "pure":
        from l4sim import _kernel

        return _kernel
    if name == "compiled":
        from l4sim import _ckernel

        return _ckernel
    raise ValueError(f"unknown backend {name!r}")
