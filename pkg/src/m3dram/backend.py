"""Selects the transient kernel backend at import time.

Prefers the compiled extension; falls back to the pure-Python kernel.
Set M3DRAM_FORCE_PY=1 to force the fallback (used by the benchmark and
the cross-backend tests).
"""

import os

from . import _transient_py

if os.environ.get("M3DRAM_FORCE_PY") == "1":
    _impl = _transient_py
else:
    try:
        from . import _transient as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _transient_py

integrate_ladder = _impl.integrate_ladder
BACKEND = _impl.BACKEND

RUN_DURATION = _transient_py.RUN_DURATION
STOP_SPREAD = _transient_py.STOP_SPREAD
STOP_SENSE_ABOVE = _transient_py.STOP_SENSE_ABOVE
STOP_CELL_ABOVE = _transient_py.STOP_CELL_ABOVE
STOP_MAXDEV = _transient_py.STOP_MAXDEV


def backend_name() -> str:
    return BACKEND
