"""Kernel backend selection.

Prefers the compiled extension ``multistep._ext`` when importable; falls
back to the pure numpy implementations otherwise.  Set the environment
variable ``MULTISTEP_PURE=1`` to force the fallback (used by the
benchmark and for debugging).
"""

from __future__ import annotations

import os

if os.environ.get("MULTISTEP_PURE", "") not in ("", "0"):
    from . import _fallback as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _ext as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl

        BACKEND = "numpy"

best_split = _impl.best_split
mg_integrate = _impl.mg_integrate
