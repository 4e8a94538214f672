"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the NumPy
fallback.  Set ``MDLAB_PURE_PYTHON=1`` to force the fallback.
"""
import logging
import os

from . import _fallback

logger = logging.getLogger(__name__)

BACKENDS = {"python": _fallback}

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and not os.environ.get("MDLAB_PURE_PYTHON"):
    BACKEND = "compiled"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _fallback
    if _compiled is None:
        logger.debug("compiled kernels unavailable; using NumPy fallback")

lowpass_eval = _impl.lowpass_eval
dirac_source = _impl.dirac_source
current = _impl.current


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active one)."""
    if name is None:
        return _impl
    return BACKENDS[name]
