"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``SWITCHCERT_PURE=1`` to force the fallback.
"""

import os

from . import _fallback

NAME = "python"
kernels = _fallback

if os.environ.get("SWITCHCERT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    else:
        kernels = _compiled
        NAME = "compiled"
else:
    _compiled = None


def get(name=None):
    """Return the kernel module by name ("compiled", "python") or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available():
    return ["compiled", "python"] if _compiled is not None else ["python"]
