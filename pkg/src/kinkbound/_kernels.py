"""Backend selection for the contact-time kernel.

The compiled Cython kernel is preferred when importable; the numpy kernel
is the fallback.  Set KINKBOUND_PURE_PYTHON=1 to force the fallback.  Both
produce bit-identical output (enforced by tests), so the choice only
affects speed.
"""

from __future__ import annotations

import os

from . import _pykern

if os.environ.get("KINKBOUND_PURE_PYTHON", "").strip() not in ("", "0"):
    _ckern = None
else:
    try:
        from . import _ckern
    except ImportError:
        _ckern = None

if _ckern is not None:
    BACKEND = "compiled"
    contact_times_scan = _ckern.contact_times_scan
else:
    BACKEND = "python"
    contact_times_scan = _pykern.contact_times_scan


def get_impl(name: str):
    """Fetch a specific kernel implementation ("compiled" or "python")."""
    if name == "python":
        return _pykern.contact_times_scan
    if name == "compiled":
        if _ckern is None:
            raise RuntimeError("compiled kernel not available")
        return _ckern.contact_times_scan
    raise ValueError(f"unknown kernel backend {name!r}")
