"""Backend selection for the hot kernels.

Set ESCOV_BACKEND=numpy to force the pure numpy path, ESCOV_BACKEND=numba
to insist on the compiled one (ImportError if numba is missing). Default
is numba when importable, numpy otherwise.
"""

import os

_requested = os.environ.get("ESCOV_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"ESCOV_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    from . import numpy_backend as backend

    BACKEND = "numpy"
elif _requested == "numba":
    from . import numba_backend as backend

    BACKEND = "numba"
else:
    try:
        from . import numba_backend as backend

        BACKEND = "numba"
    except ImportError:
        from . import numpy_backend as backend

        BACKEND = "numpy"

__all__ = ["backend", "BACKEND"]
