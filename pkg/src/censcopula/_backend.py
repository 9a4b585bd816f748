"""Select the likelihood-kernel backend at import time.

The compiled Cython extension is preferred; the numpy implementation is a
drop-in fallback.  ``CENSCOPULA_BACKEND=python`` or ``=c`` forces a choice.
"""

import os

from . import _kernels_py

_forced = os.environ.get("CENSCOPULA_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _kernels_py
    BACKEND = "python"
elif _forced in ("", "c"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "c"
    except ImportError:
        if _forced == "c":
            raise
        _impl = _kernels_py
        BACKEND = "python"
else:
    raise ValueError(f"unknown CENSCOPULA_BACKEND={_forced!r} (use 'c' or 'python')")

loglik_sum = _impl.loglik_sum
loglik_terms = _impl.loglik_terms
local_objective = _impl.local_objective
